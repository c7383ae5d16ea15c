"""Sampling schemes, their expected-residual constants, and empirical checks.

A scheme is a distribution over sampling vectors v with E[v_i] = 1:

* single-element: P[v = e_i / p_i] = p_i for a probability vector p;
* tau-nice: a uniform subset S of size tau, v = (n/tau) * sum_{i in S} e_i;
* full batch: v = (1, ..., 1) with probability one.

The expected-residual constants (A, B, C) bound the second moment of the
induced gradient estimate:

    E ||g(x)||^2 <= 2 A [f(x) - f^inf] + B ||grad f(x)||^2 + C.

Closed forms per scheme (each f_i being L_i-smooth):

    single-element:        A = (1/n) max_i L_i / p_i,  B = 0,  C = 2 A sigma*
    tau-nice:              A = (n - tau) L_max / (tau (n-1)),
                           B = n (tau - 1) / (tau (n-1)),  C = 2 A sigma*
    tau-nice + convexity:  B = 1,  C = 2 (n - tau) sigma_1 / (tau (n-1))
    full batch:            A = 0, B = 1, C = 0 (equality)

where sigma* is the average optimal-point residual and sigma_1 the average
squared component-gradient norm at x*. The single-element form fixes the
batch-size factor to 1 (singleton sets force tau = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import MetadataMissingError, Problem, ProblemStats, SamplingVector, grad_full

__all__ = [
    "SamplingScheme",
    "ERConstants",
    "ERReport",
    "DegenerateSmoothnessError",
    "single_element",
    "uniform_single_element",
    "tau_nice",
    "full_batch",
    "draw",
    "draw_indices",
    "importance_probs",
    "er_constants",
    "er_preset",
    "verify_er",
]


class DegenerateSmoothnessError(ValueError):
    """A smoothness constant is zero where a positive one is required."""


@dataclass(frozen=True)
class SamplingScheme:
    """An immutable sampling distribution over component subsets."""

    kind: str  # "single_element" | "tau_nice" | "full_batch"
    n: int
    p: Optional[np.ndarray] = None
    tau: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "single_element":
            p = np.asarray(self.p, dtype=np.float64)
            if p.shape != (self.n,):
                raise ValueError("p must have shape (n,)")
            if np.any(p <= 0) or np.any(p > 1):
                raise ValueError("probabilities must lie in (0, 1]")
            if abs(float(p.sum()) - 1.0) > 1e-12:
                raise ValueError(f"probabilities must sum to 1, got {p.sum()!r}")
            object.__setattr__(self, "p", p)
        elif self.kind == "tau_nice":
            if self.tau is None or not 1 <= self.tau <= self.n:
                raise ValueError(f"tau must lie in [1, n], got {self.tau}")
        elif self.kind != "full_batch":
            raise ValueError(f"unknown sampling kind {self.kind!r}")

    def label(self) -> str:
        if self.kind == "single_element":
            return "single_element"
        if self.kind == "tau_nice":
            return f"tau_nice({self.tau})"
        return "full_batch"


def single_element(p) -> SamplingScheme:
    p = np.asarray(p, dtype=np.float64)
    return SamplingScheme(kind="single_element", n=p.size, p=p)


def uniform_single_element(n: int) -> SamplingScheme:
    return single_element(np.full(n, 1.0 / n))


def tau_nice(n: int, tau: int) -> SamplingScheme:
    return SamplingScheme(kind="tau_nice", n=n, tau=int(tau))


def full_batch(n: int) -> SamplingScheme:
    return SamplingScheme(kind="full_batch", n=n)


def _sample_without_replacement(n: int, tau: int, rng: np.random.Generator) -> np.ndarray:
    """Partial Fisher-Yates with a sparse swap map: O(tau) expected work."""
    swaps: dict[int, int] = {}
    out = np.empty(tau, dtype=np.int64)
    for j in range(tau):
        k = int(rng.integers(j, n))
        out[j] = swaps.get(k, k)
        swaps[k] = swaps.get(j, j)
    return out


def draw(scheme: SamplingScheme, rng: np.random.Generator) -> SamplingVector:
    """Materialize one sampling vector from the scheme."""
    if scheme.kind == "full_batch":
        return SamplingVector.full(scheme.n)
    if scheme.kind == "single_element":
        i = int(rng.choice(scheme.n, p=scheme.p))
        return SamplingVector(indices=np.array([i]), weights=np.array([1.0 / scheme.p[i]]))
    idx = _sample_without_replacement(scheme.n, scheme.tau, rng)
    w = np.full(scheme.tau, scheme.n / scheme.tau)
    return SamplingVector(indices=idx, weights=w)


def draw_indices(scheme: SamplingScheme, rng: np.random.Generator, count: int) -> Optional[np.ndarray]:
    """Draw `count` index sets at once for the iteration engines.

    Returns an int64 array of shape (count,) for single-element sampling,
    (count, tau) for tau-nice, and None for full batch. Both engines consume
    these arrays, so the sample path is independent of the engine choice.
    """
    if scheme.kind == "full_batch":
        return None
    if scheme.kind == "single_element":
        return rng.choice(scheme.n, size=count, p=scheme.p).astype(np.int64)
    out = np.empty((count, scheme.tau), dtype=np.int64)
    for t in range(count):
        out[t] = _sample_without_replacement(scheme.n, scheme.tau, rng)
    return out


def importance_probs(stats: ProblemStats, allow_floor: bool = False) -> np.ndarray:
    """p_i = L_i / sum_j L_j, the probabilities minimizing max_i L_i / (n p_i).

    A zero L_i means that component is affine; refuse unless ``allow_floor``
    opts into flooring the constants at 1e-15.
    """
    L = np.asarray(stats.L_i, dtype=np.float64)
    if np.any(L <= 0):
        if not allow_floor:
            bad = int(np.argmin(L))
            raise DegenerateSmoothnessError(
                f"component {bad} has smoothness constant {L[bad]}; "
                "importance sampling needs L_i > 0 (allow_floor=True floors at 1e-15)"
            )
        L = np.maximum(L, 1e-15)
    return L / L.sum()


@dataclass(frozen=True)
class ERConstants:
    """The (A, B, C) triple of the expected-residual bound plus provenance."""

    A: float
    B: float
    C: float
    provenance: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("A", "B", "C"):
            v = getattr(self, name)
            if not (v >= 0):
                raise ValueError(f"{name} must be nonnegative, got {v}")


_FULL_BATCH_CONSTANTS_TAG = "full-batch"


def er_constants(
    scheme: SamplingScheme,
    stats: ProblemStats,
    convexity_hint: bool = False,
    sigma1: Optional[float] = None,
) -> ERConstants:
    """Closed-form expected-residual constants for the given scheme.

    ``convexity_hint`` selects the tighter tau-nice constants valid when every
    component is convex toward x*; it requires ``sigma1`` (average squared
    component-gradient norm at x*). C needs sigma*; when x* is unknown the
    constants cannot be formed and the caller must fall back to a preset or a
    user-supplied C.
    """
    if scheme.kind == "full_batch" or (scheme.kind == "tau_nice" and scheme.tau == scheme.n):
        return ERConstants(0.0, 1.0, 0.0, _FULL_BATCH_CONSTANTS_TAG)
    if scheme.kind == "tau_nice" and scheme.n == 1:
        # tau-nice formulas divide by n - 1; n = 1 forces the deterministic case
        return ERConstants(0.0, 1.0, 0.0, _FULL_BATCH_CONSTANTS_TAG)

    if scheme.kind == "single_element":
        A = float(np.max(stats.L_i / scheme.p) / scheme.n)
        sig = _require_sigma_star(stats)
        return ERConstants(A, 0.0, 2.0 * A * sig, "single-element", {"sigma_star": sig})

    n, tau = scheme.n, scheme.tau
    A = (n - tau) * stats.L_max / (tau * (n - 1))
    if convexity_hint:
        if sigma1 is None:
            raise MetadataMissingError("the convexity-hint constants need sigma1")
        C = 2.0 * (n - tau) * float(sigma1) / (tau * (n - 1))
        return ERConstants(A, 1.0, C, "tau-nice-convex", {"sigma1": float(sigma1)})
    B = n * (tau - 1) / (tau * (n - 1))
    sig = _require_sigma_star(stats)
    return ERConstants(A, B, 2.0 * A * sig, "tau-nice", {"sigma_star": sig})


def _require_sigma_star(stats: ProblemStats) -> float:
    if stats.sigma_star is None:
        raise MetadataMissingError(
            "sigma* is unknown (no x*); supply a preset or an explicit C instead of fabricating one"
        )
    return float(stats.sigma_star)


_PRESETS = {
    "bounded_gradient": ("sigma_sq",),
    "bounded_variance": ("sigma_sq",),
    "expected_smoothness": ("smoothness",),
    "relaxed_growth_rho": ("rho", "sigma_sq"),
    "relaxed_growth_alpha": ("alpha", "sigma_sq"),
}


def er_preset(name: str, **params: float) -> ERConstants:
    """Expected-residual constants implied by a classical noise assumption.

    bounded_gradient(sigma_sq)        -> (0, 0, sigma^2)
    bounded_variance(sigma_sq)        -> (0, 1, sigma^2)
    expected_smoothness(smoothness)   -> (2 smoothness, 0, 0)
    relaxed_growth_rho(rho, sigma_sq) -> (0, rho, sigma^2)
    relaxed_growth_alpha(alpha, sigma_sq) -> (alpha, 0, sigma^2)
    """
    if name not in _PRESETS:
        raise ValueError(f"unknown preset {name!r}; known: {sorted(_PRESETS)}")
    expected = _PRESETS[name]
    if set(params) != set(expected):
        raise ValueError(f"preset {name!r} takes parameters {expected}, got {sorted(params)}")
    for key, v in params.items():
        if v < 0:
            raise ValueError(f"{key} must be nonnegative, got {v}")
    tag = f"preset:{name}"
    if name == "bounded_gradient":
        return ERConstants(0.0, 0.0, params["sigma_sq"], tag)
    if name == "bounded_variance":
        return ERConstants(0.0, 1.0, params["sigma_sq"], tag)
    if name == "expected_smoothness":
        return ERConstants(2.0 * params["smoothness"], 0.0, 0.0, tag)
    if name == "relaxed_growth_rho":
        return ERConstants(0.0, params["rho"], params["sigma_sq"], tag)
    return ERConstants(params["alpha"], 0.0, params["sigma_sq"], tag)


@dataclass(frozen=True)
class ERReport:
    """Result of checking the expected-residual bound at sampled points."""

    passed: bool
    exact: bool
    worst_slack: float  # min over points of bound - estimate (negative = violation)
    worst_point: int
    estimates: np.ndarray
    bounds: np.ndarray
    std_errors: np.ndarray


def verify_er(
    problem: Problem,
    scheme: SamplingScheme,
    c: ERConstants,
    points: int = 100,
    draws: int = 10_000,
    rng: Optional[np.random.Generator] = None,
    point_scale: float = 1.0,
) -> ERReport:
    """Check E||g(x)||^2 <= 2A [f(x) - f^inf] + B ||grad f(x)||^2 + C empirically.

    Single-element and full-batch schemes have at most n outcomes, so the
    expectation is enumerated exactly; tau-nice uses Monte Carlo with a
    4-standard-error allowance.
    """
    f_ref = problem.f_reference()
    if f_ref is None:
        raise MetadataMissingError("verify_er needs f^inf (or f*) in the problem metadata")
    if rng is None:
        rng = np.random.default_rng(0)

    exact = scheme.kind in ("single_element", "full_batch")
    center = problem.stats.x_star if problem.stats.x_star is not None else np.zeros(problem.d)

    estimates = np.empty(points)
    bounds = np.empty(points)
    ses = np.zeros(points)
    from .core import eval_loss, grad_stoch  # local import to avoid cycle at module load

    for k in range(points):
        x = center + point_scale * rng.standard_normal(problem.d)
        gf = grad_full(problem, x)
        fx = eval_loss(problem, x)
        bounds[k] = 2.0 * c.A * (fx - f_ref) + c.B * float(gf @ gf) + c.C

        if scheme.kind == "full_batch":
            estimates[k] = float(gf @ gf)
        elif scheme.kind == "single_element":
            acc = 0.0
            for i in range(problem.n):
                gi = problem.component_grad(i, x)
                acc += float(gi @ gi) / scheme.p[i]
            estimates[k] = acc / problem.n**2
        else:
            sq = np.empty(draws)
            for m in range(draws):
                g = grad_stoch(problem, x, draw(scheme, rng))
                sq[m] = float(g @ g)
            estimates[k] = float(sq.mean())
            ses[k] = float(sq.std(ddof=1) / math.sqrt(draws))

    slack = bounds - estimates + 4.0 * ses + 1e-12 * (1.0 + np.abs(bounds))
    worst = int(np.argmin(slack))
    return ERReport(
        passed=bool(np.all(slack >= 0)),
        exact=exact,
        worst_slack=float((bounds - estimates)[worst]),
        worst_point=worst,
        estimates=estimates,
        bounds=bounds,
        std_errors=ses,
    )
