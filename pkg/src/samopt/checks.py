"""Numerically checkable guarantees: bound suites behind `verify` and the tests.

Three families of checks, each returning a :class:`CheckResult`:

* perturbed-gradient bounds: with single-element sampling the expectation over
  draws is a sum of n terms, so the second-moment bound

      E ||g(x + rho s(g) g)||^2 <= 4 L^2 rho^2 lam^2
                                   + 2 [2 L^2 rho^2 (1-lam)^2 + 1] E ||g(x)||^2

  and the inner-product bound

      E <g(x + rho s(g) g), grad f(x)> >= (1 - L rho / 2) ||grad f||^2
            - L rho lam^2 - L rho (1-lam)^2 E ||g(x)||^2

  (s(g) = (1-lam) + lam/||g||, L = L_max) are evaluated exactly at random
  (x, rho, lam) triples;

* the PL constant-step envelope: trial-averaged suboptimality must stay below
  (1 - gamma mu)^t delta0 + N within a standard-error allowance;

* the expected-residual condition via :func:`samopt.sampling.verify_er`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Problem, grad_full, stream
from .optimizer import OptimizerConfig, run
from .sampling import ERConstants, SamplingScheme, er_constants, verify_er
from .schedules import StepPlan, pl_constant_steps

__all__ = [
    "CheckResult",
    "perturbed_gradient_bound_checks",
    "envelope_check",
    "er_check",
]

_ROUND_SLACK = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_slack: float  # most adverse margin; negative means violated
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "worst_slack": float(self.worst_slack),
            "details": {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                        for k, v in self.details.items()},
        }


def _enumerated_moments(problem: Problem, p: np.ndarray, x: np.ndarray, rho: float, lam: float):
    """Exact per-outcome quantities for single-element sampling at x."""
    n = problem.n
    second_moment = 0.0
    lhs_sq = 0.0
    lhs_dot = 0.0
    gf = grad_full(problem, x)
    for i in range(n):
        w = 1.0 / (n * p[i])
        gi = w * problem.component_grad(i, x)
        gnorm = float(np.linalg.norm(gi))
        second_moment += p[i] * float(gi @ gi)
        if gnorm <= 1e-12:
            scale = rho * (1.0 - lam)
        else:
            scale = rho * ((1.0 - lam) + lam / gnorm)
        hi = w * problem.component_grad(i, x + scale * gi)
        lhs_sq += p[i] * float(hi @ hi)
        lhs_dot += p[i] * float(hi @ gf)
    return second_moment, lhs_sq, lhs_dot, gf


def perturbed_gradient_bound_checks(
    problem: Problem,
    p: Optional[np.ndarray] = None,
    triples: int = 100,
    seed: int = 0,
    point_scale: float = 1.0,
    rho_max: Optional[float] = None,
) -> tuple[CheckResult, CheckResult]:
    """Exact-enumeration check of the two perturbed-gradient bounds.

    Draws `triples` random (x, rho, lam) combinations; rho is log-uniform in
    (1e-3, rho_max] with rho_max defaulting to 1/L_max.
    """
    rng = stream(seed, 915)
    n = problem.n
    if p is None:
        p = np.full(n, 1.0 / n)
    L = problem.stats.L_max
    if rho_max is None:
        rho_max = 1.0 / L
    center = problem.stats.x_star if problem.stats.x_star is not None else np.zeros(problem.d)

    worst_sq = np.inf
    worst_dot = np.inf
    for _ in range(triples):
        x = center + point_scale * rng.standard_normal(problem.d)
        rho = float(np.exp(rng.uniform(np.log(1e-3), np.log(rho_max))))
        lam = float(rng.uniform(0.0, 1.0))
        m2, lhs_sq, lhs_dot, gf = _enumerated_moments(problem, p, x, rho, lam)

        rhs_sq = 4.0 * L**2 * rho**2 * lam**2 + 2.0 * (2.0 * L**2 * rho**2 * (1.0 - lam) ** 2 + 1.0) * m2
        slack_sq = (rhs_sq - lhs_sq) / max(1.0, abs(rhs_sq))
        worst_sq = min(worst_sq, slack_sq)

        gfsq = float(gf @ gf)
        rhs_dot = (1.0 - L * rho / 2.0) * gfsq - L * rho * lam**2 - L * rho * (1.0 - lam) ** 2 * m2
        slack_dot = (lhs_dot - rhs_dot) / max(1.0, abs(rhs_dot))
        worst_dot = min(worst_dot, slack_dot)

    res_sq = CheckResult(
        "perturbed-gradient-second-moment", worst_sq >= -_ROUND_SLACK, worst_sq,
        {"triples": triples},
    )
    res_dot = CheckResult(
        "perturbed-gradient-inner-product", worst_dot >= -_ROUND_SLACK, worst_dot,
        {"triples": triples},
    )
    return res_sq, res_dot


def envelope_check(
    problem: Problem,
    scheme: SamplingScheme,
    lam: float,
    trials: int = 20,
    max_iters: int = 2000,
    record_every: int = 50,
    base_seed: int = 0,
    se_mult: float = 3.0,
    constants: Optional[ERConstants] = None,
    engine: str = "auto",
) -> CheckResult:
    """Trial-averaged suboptimality against the constant-step PL envelope."""
    st = problem.stats
    if st.mu is None or st.f_star is None:
        raise ValueError("envelope check needs mu and f* in the problem metadata")
    c = constants if constants is not None else er_constants(scheme, st)
    rates = pl_constant_steps(c, st.L_max, st.mu, lam)
    plan = StepPlan.from_pl_rates(rates)
    cfg = OptimizerConfig(plan=plan, scheme=scheme, max_iters=max_iters,
                          x0=np.zeros(problem.d), record_every=record_every, engine=engine)

    records = [run(problem, cfg, stream(base_seed, trial)) for trial in range(trials)]
    subopt = np.vstack([r.subopt for r in records])
    ts = records[0].iterations.astype(np.float64)
    mean = subopt.mean(axis=0)
    se = subopt.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else np.zeros_like(mean)

    delta0 = records[0].delta0
    envelope = rates.rate**ts * delta0 + rates.N
    slack = envelope + se_mult * se - mean
    rel = slack / np.maximum(1e-300, envelope)
    worst = int(np.argmin(rel))
    return CheckResult(
        "pl-envelope",
        bool(np.all(slack >= -_ROUND_SLACK * np.maximum(1.0, envelope))),
        float(rel[worst]),
        {
            "worst_iteration": int(ts[worst]),
            "mean_at_worst": float(mean[worst]),
            "envelope_at_worst": float(envelope[worst]),
            "rate": rates.rate,
            "N": rates.N,
            "trials": trials,
        },
    )


def er_check(
    problem: Problem,
    scheme: SamplingScheme,
    constants: Optional[ERConstants] = None,
    scale: float = 1.0,
    points: int = 100,
    draws: int = 10_000,
    seed: int = 0,
    name: str = "expected-residual",
) -> CheckResult:
    """Expected-residual bound with scheme constants, optionally scaled."""
    c = constants if constants is not None else er_constants(scheme, problem.stats)
    if scale != 1.0:
        c = ERConstants(c.A * scale, c.B * scale, c.C * scale, c.provenance + f"*{scale}")
    report = verify_er(problem, scheme, c, points=points, draws=draws, rng=stream(seed, 916))
    return CheckResult(
        name,
        report.passed,
        report.worst_slack,
        {"exact": report.exact, "worst_point": report.worst_point, "provenance": c.provenance},
    )
