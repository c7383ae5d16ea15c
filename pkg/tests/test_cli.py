import json
import os

import numpy as np
import pytest

from samopt import cli
from samopt.cli import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    load_config,
    read_csv,
    run_experiment,
)


def tiny_config(tmp_path, **overrides):
    raw = {
        "experiment_id": "tiny",
        "output": str(tmp_path / "out.csv"),
        "trials": 3,
        "epochs": 4,
        "base_seed": 5,
        "problem": {"family": "ridge", "n": 12, "d": 4, "cond": 3.0,
                    "lambda_r": 0.1, "seed": 2},
        "scheme": {"kind": "single_element", "probabilities": "uniform"},
        "steps": {"source": "pl_constant"},
        "lambda": {"kind": "const", "values": [0.0, 1.0]},
    }
    raw.update(overrides)
    return config_from_dict(raw)


def test_toml_round_trip(tmp_path):
    cfg_path = tmp_path / "cfg.toml"
    cfg_path.write_text(
        'output = "%s"\ntrials = 2\nepochs = 3\n\n'
        "[problem]\nfamily = \"ridge\"\nn = 10\nd = 4\ncond = 2.0\nlambda_r = 0.05\nseed = 1\n\n"
        "[scheme]\nkind = \"full_batch\"\n\n[steps]\nsource = \"manual\"\nrho = 0.01\ngamma = 0.5\n\n"
        "[lambda]\nkind = \"const\"\nvalue = 0.5\n" % (tmp_path / "o.csv")
    )
    cfg = load_config(str(cfg_path))
    assert cfg.trials == 2 and cfg.epochs == 3
    assert cfg.lambdas == (0.5,)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        config_from_dict({"output": "x.csv", "problem": {"family": "ridge"}, "typo_key": 1})
    with pytest.raises(ConfigError, match="unknown key"):
        config_from_dict({"output": "x.csv", "problem": {"family": "ridge", "rows": 5}})


def test_flag_overrides_win(tmp_path):
    cfg_path = tmp_path / "cfg.toml"
    cfg_path.write_text(
        'output = "ignored.csv"\ntrials = 9\n\n[problem]\nfamily = "ridge"\nn = 8\nd = 3\n'
        'cond = 2.0\nlambda_r = 0.1\nseed = 1\n\n[steps]\nsource = "manual"\nrho = 0.0\ngamma = 0.3\n'
    )
    cfg = load_config(str(cfg_path), {"trials": 2, "output": str(tmp_path / "real.csv")})
    assert cfg.trials == 2
    assert cfg.output.endswith("real.csv")


def test_invalid_fields_rejected(tmp_path):
    with pytest.raises(ConfigError, match="trials"):
        tiny_config(tmp_path, trials=0)
    with pytest.raises(ConfigError, match="epochs"):
        tiny_config(tmp_path, epochs=0)
    with pytest.raises(ConfigError, match="lambda"):
        tiny_config(tmp_path, **{"lambda": {"kind": "const", "values": [1.5]}})
    with pytest.raises(ConfigError, match="family"):
        tiny_config(tmp_path, problem={"family": "svm"})


def test_run_experiment_csv_schema(tmp_path):
    cfg = tiny_config(tmp_path)
    res = run_experiment(cfg)
    meta, rows = read_csv(res.path)
    assert meta["config"]["experiment_id"] == "tiny"
    assert set(meta["plans"]) == {"0", "1"}
    with open(res.path) as fh:
        header = [l for l in fh if not l.startswith("#")][0].strip()
    assert header == ",".join(CSV_COLUMNS)
    # single-element: 12 iterations per epoch, logged once per epoch plus final
    trial_rows = [r for r in rows if r["trial"] == "0" and r["lambda"] == 0.0]
    assert [r["iteration"] for r in trial_rows] == [0, 12, 24, 36, 48]
    assert [r["epoch"] for r in trial_rows] == [0, 1, 2, 3, 4]


def test_csv_round_trip_exact(tmp_path):
    cfg = tiny_config(tmp_path)
    res = run_experiment(cfg)
    _, rows = read_csv(res.path)
    for gi, (label, lam, _) in enumerate(res.groups):
        for trial in range(cfg.trials):
            rec = res.records[(gi, trial)]
            got = [r for r in rows if r["trial"] == str(trial) and r["lambda"] == lam]
            assert len(got) == rec.iterations.size
            for j, row in enumerate(got):
                assert row["loss"] == rec.loss[j]            # exact: 17 significant digits
                assert row["subopt"] == rec.subopt[j]
                assert row["grad_norm"] == rec.grad_norm[j]
                assert row["rho"] == rec.rho[j]
                assert row["gamma"] == rec.gamma[j]


def test_aggregate_rows_match_recomputation(tmp_path):
    cfg = tiny_config(tmp_path)
    res = run_experiment(cfg)
    _, rows = read_csv(res.path)
    for lam in (0.0, 1.0):
        data = [r for r in rows if r["lambda"] == lam and r["trial"] not in ("mean", "std")]
        means = [r for r in rows if r["lambda"] == lam and r["trial"] == "mean"]
        stds = [r for r in rows if r["lambda"] == lam and r["trial"] == "std"]
        iters = sorted({r["iteration"] for r in data})
        assert [m["iteration"] for m in means] == iters
        for m, s, t in zip(means, stds, iters):
            vals = np.array([r["subopt"] for r in data if r["iteration"] == t])
            assert abs(m["subopt"] - vals.mean()) <= 1e-12 * max(1.0, abs(vals.mean()))
            assert abs(s["subopt"] - vals.std(ddof=0)) <= 1e-12 * max(1.0, vals.std(ddof=0))


def test_trial_streams_differ(tmp_path):
    cfg = tiny_config(tmp_path)
    res = run_experiment(cfg)
    r0 = res.records[(0, 0)]
    r1 = res.records[(0, 1)]
    assert not np.array_equal(r0.x_final, r1.x_final)


def test_output_is_deterministic(tmp_path):
    cfg1 = tiny_config(tmp_path, output=str(tmp_path / "a.csv"))
    cfg2 = tiny_config(tmp_path, output=str(tmp_path / "b.csv"))
    run_experiment(cfg1)
    run_experiment(cfg2)
    a = (tmp_path / "a.csv").read_text().replace("a.csv", "X")
    b = (tmp_path / "b.csv").read_text().replace("b.csv", "X")
    assert a == b


def test_gen_and_run_from_problem_file(tmp_path):
    rc = cli.main(["gen", "--family", "ridge", "--n", "10", "--d", "4", "--cond", "2.0",
                   "--lambda-r", "0.1", "--seed", "3", "--out", str(tmp_path / "p.json")])
    assert rc == 0
    cfg = tiny_config(tmp_path, problem={"file": str(tmp_path / "p.json")})
    res = run_experiment(cfg)
    assert os.path.exists(res.path)
    assert res.problem.n == 10


def test_manual_and_vasso_config(tmp_path):
    cfg = tiny_config(tmp_path, steps={"source": "manual", "rho": 0.01, "gamma": 0.2},
                      vasso={"theta": 0.4})
    res = run_experiment(cfg)
    assert res.records[(0, 0)].subopt[-1] < res.records[(0, 0)].subopt[0]


def test_main_exit_codes(tmp_path):
    # config error: missing file
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == 1
    # usage error mapped to 1
    assert cli.main(["run"]) == 1
    assert cli.main(["bogus-subcommand"]) == 1
    # verification failure is 2
    assert cli.main(["verify", "--er-scale", "0.4", "--trials", "4",
                     "--points", "20", "--triples", "10"]) == 2


def test_verify_passes(capsys):
    rc = cli.main(["verify", "--trials", "4", "--points", "20", "--triples", "10"])
    out = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert out["passed"] is True
    assert {c["name"] for c in out["checks"]} == {
        "expected-residual", "expected-residual-tight",
        "perturbed-gradient-second-moment",
        "perturbed-gradient-inner-product", "pl-envelope",
    }


def test_bounds_subcommand(capsys):
    rc = cli.main(["bounds", "--A", "0", "--B", "1", "--C", "0", "--L-max", "1",
                   "--lam", "1.0", "--mu", "0.5", "--rho", "0.5",
                   "--eps", "0.1", "--delta0", "1.0"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["rho_star"] == pytest.approx(1.0)
    assert out["gamma_star"] == pytest.approx(0.25)
    assert out["T_min"] == 9600


def test_fig_presets_smoke(tmp_path):
    rc = cli.main(["fig1", "--out-dir", str(tmp_path), "--epochs", "2"])
    assert rc == 0
    meta, rows = read_csv(str(tmp_path / "fig1.csv"))
    assert len({r["lambda"] for r in rows}) == 11
    rc = cli.main(["fig2", "--out-dir", str(tmp_path), "--epochs", "3", "--trials", "2"])
    assert rc == 0
    assert os.path.exists(tmp_path / "fig2_constant.csv")
    assert os.path.exists(tmp_path / "fig2_decreasing.csv")
    rc = cli.main(["fig3", "--out-dir", str(tmp_path), "--epochs", "3", "--trials", "2"])
    assert rc == 0
    assert os.path.exists(tmp_path / "fig3_uniform.csv")
    assert os.path.exists(tmp_path / "fig3_importance.csv")


def test_workers_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SAMOPT_WORKERS", "1")
    cfg = tiny_config(tmp_path)
    res = run_experiment(cfg)
    assert os.path.exists(res.path)
