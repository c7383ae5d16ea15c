"""The blended sharpness-aware update, its VaSSO variant, and the run loop.

One iteration draws a single sampling vector v, forms g = (1/n) sum v_i grad f_i(x),
and takes the step

    x_next = x - gamma_t * g_v(x + rho_t * ((1 - lambda_t) + lambda_t / ||g||) * g)

where the outer gradient g_v reuses the same draw (one sampling event, two
gradient evaluations). lambda = 0 is the unnormalized perturbation (USAM),
lambda = 1 the fully normalized one (SAM), rho = 0 plain SGD. When
``||g|| <= 1e-12`` the normalized term is defined as 0, so the perturbation
degenerates to rho (1 - lambda) g; such events are counted and reported.

Two engines execute the loop: a compiled kernel for dense ridge/logistic
problems (imported lazily, with a pure-Python fallback selected at import
failure) and a generic Python loop that works for any Problem through its
component oracles. ``SAMOPT_ENGINE`` (auto | compiled | python) overrides the
per-run engine choice.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import ZERO_GRAD_TOL, Problem, eval_loss, grad_full, grad_stoch
from .sampling import SamplingScheme, draw_indices
from .schedules import StepPlan

try:
    from . import _kernels

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None
    HAVE_COMPILED = False

__all__ = [
    "DivergenceError",
    "OptimizerConfig",
    "RunRecord",
    "unified_sam_step",
    "unified_vasso_step",
    "run",
    "HAVE_COMPILED",
]

DIVERGE_LOSS = 1e100
_CHUNK = 1 << 16


class DivergenceError(FloatingPointError):
    """The iteration produced a non-finite point; carries the iteration index."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        super().__init__(message)
        self.iteration = iteration


def _perturbation_scale(gnorm: float, rho: float, lam: float) -> tuple[float, bool]:
    if gnorm <= ZERO_GRAD_TOL:
        return rho * (1.0 - lam), True
    return rho * ((1.0 - lam) + lam / gnorm), False


def unified_sam_step(
    x: np.ndarray,
    g: np.ndarray,
    rho: float,
    gamma: float,
    lam: float,
    grad_at: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    """One update from x given the inner estimate g; grad_at must evaluate the
    same sampled component(s) that produced g."""
    gnorm = float(np.linalg.norm(g))
    scale, _ = _perturbation_scale(gnorm, rho, lam)
    xp = x + scale * g
    if not np.all(np.isfinite(xp)):
        raise DivergenceError("perturbed point is non-finite")
    return x - gamma * grad_at(xp)


def unified_vasso_step(
    x: np.ndarray,
    d_prev: np.ndarray,
    g: np.ndarray,
    theta: float,
    rho: float,
    gamma: float,
    lam: float,
    grad_at: Callable[[np.ndarray], np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """VaSSO variant: the perturbation direction is the moving average
    d = (1 - theta) d_prev + theta g. theta = 1 recovers the plain step."""
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    d = (1.0 - theta) * d_prev + theta * g
    dnorm = float(np.linalg.norm(d))
    scale, _ = _perturbation_scale(dnorm, rho, lam)
    xp = x + scale * d
    if not np.all(np.isfinite(xp)):
        raise DivergenceError("perturbed point is non-finite")
    return x - gamma * grad_at(xp), d


@dataclass(frozen=True)
class OptimizerConfig:
    """One run: a step plan, a sampling scheme, a horizon, and a start point."""

    plan: StepPlan
    scheme: SamplingScheme
    max_iters: int
    x0: np.ndarray
    vasso_theta: Optional[float] = None
    record_every: int = 1
    engine: str = "auto"  # "auto" | "compiled" | "python"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.vasso_theta is not None and not 0.0 < self.vasso_theta <= 1.0:
            raise ValueError(f"vasso_theta must lie in (0, 1], got {self.vasso_theta}")
        if self.engine not in ("auto", "compiled", "python"):
            raise ValueError(f"unknown engine {self.engine!r}")
        object.__setattr__(self, "x0", np.ascontiguousarray(self.x0, dtype=np.float64))


@dataclass
class RunRecord:
    """Per-iteration trajectory of one seeded trial, logged every record_every."""

    iterations: np.ndarray
    loss: np.ndarray
    subopt: np.ndarray
    grad_norm: np.ndarray
    rho: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    zero_grad_events: np.ndarray  # cumulative count at each logged iteration
    delta0: float
    f_ref: Optional[float]
    diverged: bool
    diverged_at: Optional[int]
    x_final: np.ndarray
    engine: str


def _record_points(max_iters: int, record_every: int) -> np.ndarray:
    pts = list(range(0, max_iters, record_every))
    if pts[-1] != max_iters:
        pts.append(max_iters)
    return np.asarray(pts, dtype=np.int64)


def _resolve_engine(requested: str, problem: Problem) -> str:
    requested = os.environ.get("SAMOPT_ENGINE", requested)
    dense = problem.kind in ("ridge", "logistic") and problem.A is not None
    if requested == "python":
        return "python"
    if requested == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernels are unavailable (extension not built)")
        if not dense:
            raise RuntimeError("compiled kernels support dense ridge/logistic problems only")
        return "compiled"
    return "compiled" if (HAVE_COMPILED and dense) else "python"


def run(problem: Problem, config: OptimizerConfig, rng: np.random.Generator) -> RunRecord:
    """Execute the iteration for max_iters steps, one sampling draw per step.

    Divergence (non-finite loss or |f| > 1e100) aborts with the partial record
    flagged. Identical (problem, config, stream) inputs produce byte-identical
    records on a given engine.
    """
    if config.x0.shape != (problem.d,):
        raise ValueError(f"x0 must have shape ({problem.d},)")
    if config.scheme.n != problem.n:
        raise ValueError("sampling scheme and problem disagree on n")
    engine = _resolve_engine(config.engine, problem)
    record_ts = _record_points(config.max_iters, config.record_every)
    if engine == "compiled":
        return _run_compiled(problem, config, rng, record_ts)
    return _run_python(problem, config, rng, record_ts)


def _finalize(
    problem: Problem,
    config: OptimizerConfig,
    engine: str,
    record_ts: np.ndarray,
    filled: int,
    loss: np.ndarray,
    gnorm: np.ndarray,
    zeros: np.ndarray,
    x: np.ndarray,
    diverged_at: Optional[int],
) -> RunRecord:
    ts = record_ts[:filled]
    loss = loss[:filled]
    f_ref = problem.f_reference()
    subopt = loss - f_ref if f_ref is not None else np.full(filled, np.nan)
    rho = np.array([config.plan.rho_at(int(t)) for t in ts])
    gamma = np.array([config.plan.gamma_at(int(t)) for t in ts])
    lam = np.array([config.plan.lambda_at(int(t)) for t in ts])
    delta0 = float(loss[0] - f_ref) if (filled and f_ref is not None) else float("nan")
    return RunRecord(
        iterations=ts.copy(),
        loss=loss.copy(),
        subopt=subopt,
        grad_norm=gnorm[:filled].copy(),
        rho=rho,
        gamma=gamma,
        lam=lam,
        zero_grad_events=zeros[:filled].copy(),
        delta0=delta0,
        f_ref=f_ref,
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
        x_final=x.copy(),
        engine=engine,
    )


def _run_python(problem, config, rng, record_ts) -> RunRecord:
    scheme = config.scheme
    plan = config.plan
    theta = config.vasso_theta
    n = problem.n
    T = config.max_iters

    x = config.x0.copy()
    d_vec = np.zeros(problem.d)
    zero_count = 0
    n_rec = record_ts.size
    loss_log = np.empty(n_rec)
    gnorm_log = np.empty(n_rec)
    zeros_log = np.empty(n_rec, dtype=np.int64)
    filled = 0
    diverged_at: Optional[int] = None

    def estimator(idx_row, point):
        if idx_row is None:
            return grad_full(problem, point)
        if scheme.kind == "single_element":
            i = int(idx_row)
            return (1.0 / (n * scheme.p[i])) * problem.component_grad(i, point)
        acc = problem.component_grad(int(idx_row[0]), point)
        for j in idx_row[1:]:
            acc = acc + problem.component_grad(int(j), point)
        return (1.0 / scheme.tau) * acc

    rec_ptr = 0
    t = 0
    while t < T and diverged_at is None:
        m = min(_CHUNK, T - t)
        idx = draw_indices(scheme, rng, m)
        rho_arr, gamma_arr, lam_arr = plan.arrays(t, m)
        for local in range(m):
            if rec_ptr < n_rec and record_ts[rec_ptr] == t + local:
                fx = eval_loss(problem, x)
                loss_log[filled] = fx
                gnorm_log[filled] = float(np.linalg.norm(grad_full(problem, x)))
                zeros_log[filled] = zero_count
                filled += 1
                rec_ptr += 1
                if not np.isfinite(fx) or abs(fx) > DIVERGE_LOSS:
                    diverged_at = t + local
                    break
            row = None if idx is None else idx[local]
            g = estimator(row, x)
            gnorm = float(np.linalg.norm(g))
            if not np.isfinite(gnorm):
                diverged_at = t + local
                break
            rho_t, gamma_t, lam_t = rho_arr[local], gamma_arr[local], lam_arr[local]
            if theta is not None:
                d_vec = (1.0 - theta) * d_vec + theta * g
                direction = d_vec
                dirnorm = float(np.linalg.norm(d_vec))
            else:
                direction = g
                dirnorm = gnorm
            scale, was_zero = _perturbation_scale(dirnorm, rho_t, lam_t)
            if was_zero:
                zero_count += 1
            xp = x + scale * direction
            if not np.all(np.isfinite(xp)):
                diverged_at = t + local
                break
            x = x - gamma_t * estimator(row, xp)
        t += m

    if diverged_at is None and rec_ptr < n_rec and record_ts[rec_ptr] == T:
        fx = eval_loss(problem, x)
        loss_log[filled] = fx
        gnorm_log[filled] = float(np.linalg.norm(grad_full(problem, x)))
        zeros_log[filled] = zero_count
        filled += 1
        if not np.isfinite(fx) or abs(fx) > DIVERGE_LOSS:
            diverged_at = T

    return _finalize(problem, config, "python", record_ts, filled, loss_log, gnorm_log, zeros_log, x, diverged_at)


def _run_compiled(problem, config, rng, record_ts) -> RunRecord:
    scheme = config.scheme
    plan = config.plan
    kind_code = 0 if problem.kind == "ridge" else 1
    mode = {"single_element": 0, "tau_nice": 1, "full_batch": 2}[scheme.kind]
    theta = config.vasso_theta if config.vasso_theta is not None else 0.0
    T = config.max_iters
    n = problem.n

    x = config.x0.copy()
    d_vec = np.zeros(problem.d)
    zero_count = 0
    n_rec = record_ts.size
    loss_log = np.empty(n_rec)
    gnorm_log = np.empty(n_rec)
    zeros_log = np.empty(n_rec, dtype=np.int64)
    filled = 0
    diverged_at: Optional[int] = None

    rec_ptr = 0
    t = 0
    while t < T and diverged_at is None:
        m = min(_CHUNK, T - t)
        idx = draw_indices(scheme, rng, m)
        rho_arr, gamma_arr, lam_arr = plan.arrays(t, m)
        if mode == 0:
            idx1 = np.ascontiguousarray(idx)
            w_arr = 1.0 / (n * scheme.p[idx1])
            idx2 = np.empty((0, 0), dtype=np.int64)
        elif mode == 1:
            idx2 = np.ascontiguousarray(idx)
            idx1 = np.empty(0, dtype=np.int64)
            w_arr = np.empty(0)
        else:
            idx1 = np.empty(0, dtype=np.int64)
            idx2 = np.empty((0, 0), dtype=np.int64)
            w_arr = np.empty(0)

        take = 0
        while rec_ptr + take < n_rec and record_ts[rec_ptr + take] < t + m:
            take += 1
        rec_local = np.ascontiguousarray(record_ts[rec_ptr : rec_ptr + take] - t)

        status, diverged_local, zero_count, wrote = _kernels.run_chunk(
            kind_code, problem.A, problem.b, problem.lam_r, x, d_vec,
            mode, idx1, w_arr, idx2, rho_arr, gamma_arr, lam_arr, float(theta),
            rec_local, loss_log[filled:], gnorm_log[filled:], zeros_log[filled:],
            zero_count, DIVERGE_LOSS,
        )
        filled += wrote
        rec_ptr += wrote
        if status != 0:
            diverged_at = t + diverged_local
        t += m

    if diverged_at is None and rec_ptr < n_rec and record_ts[rec_ptr] == T:
        fx, gn = _kernels.dense_loss_gradnorm(kind_code, problem.A, problem.b, problem.lam_r, x)
        loss_log[filled] = fx
        gnorm_log[filled] = gn
        zeros_log[filled] = zero_count
        filled += 1
        if not np.isfinite(fx) or abs(fx) > DIVERGE_LOSS:
            diverged_at = T

    return _finalize(problem, config, "compiled", record_ts, filled, loss_log, gnorm_log, zeros_log, x, diverged_at)
