import numpy as np
import pytest

from samopt import ERConstants, er_constants, importance_probs, uniform_single_element
from samopt.checks import envelope_check, er_check, perturbed_gradient_bound_checks


def test_perturbed_gradient_bounds_hold(small_ridge):
    res_sq, res_dot = perturbed_gradient_bound_checks(small_ridge, triples=60, seed=1)
    assert res_sq.passed, res_sq
    assert res_dot.passed, res_dot


def test_perturbed_gradient_bounds_hold_importance(small_ridge):
    p = importance_probs(small_ridge.stats)
    res_sq, res_dot = perturbed_gradient_bound_checks(small_ridge, p=p, triples=60, seed=2)
    assert res_sq.passed and res_dot.passed


def test_envelope_holds(small_ridge):
    res = envelope_check(small_ridge, uniform_single_element(small_ridge.n), lam=0.5,
                         trials=12, max_iters=1500, record_every=50, base_seed=3)
    assert res.passed, res


def test_envelope_detects_understated_floor(small_ridge):
    """Claiming C = 0 at lam = 0 forces N = 0; the stalled mean must violate
    the then purely geometric envelope."""
    scheme = uniform_single_element(small_ridge.n)
    honest = er_constants(scheme, small_ridge.stats)
    fake = ERConstants(honest.A, honest.B, 0.0, "fake-noise-free")
    res = envelope_check(small_ridge, scheme, lam=0.0, trials=12, max_iters=4000,
                         record_every=100, base_seed=3, constants=fake)
    assert not res.passed


def test_er_check_scaled_down_fails(small_ridge):
    ok = er_check(small_ridge, uniform_single_element(small_ridge.n), points=40, seed=4)
    assert ok.passed
    # near-identity rows make the bound tight enough that halving must fail
    from samopt import ridge_from_data, stream

    rng = stream(5)
    A = np.eye(10) + 0.01 * rng.standard_normal((10, 10))
    tight = ridge_from_data(A, rng.standard_normal(10), 0.0)
    bad = er_check(tight, uniform_single_element(10), scale=0.5, points=40, seed=5)
    assert not bad.passed
    assert bad.worst_slack < 0


def test_check_result_serializes(small_ridge):
    res = er_check(small_ridge, uniform_single_element(small_ridge.n), points=10, seed=6)
    payload = res.to_json()
    assert set(payload) == {"name", "passed", "worst_slack", "details"}
