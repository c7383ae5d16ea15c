"""Synthetic problem families: ridge and l2-regularized logistic regression.

Both families are built from a data matrix A = U diag(s) V^T with random
orthogonal factors and a prescribed singular spectrum, so the condition
number of A is exact by construction. Components are

    ridge:    f_i(x) = 1/2 (A[i,:] x - b_i)^2 + lam_r/2 ||x||^2
    logistic: f_i(x) = 1/2 log(1 + exp(-b_i A[i,:] x)) + lam_r/2 ||x||^2

so that f = (1/n) sum_i f_i matches the harness's finite-sum convention.
Metadata (L_i, mu, x*, f*, sigma*) is exact where a closed form exists and
numeric (documented tolerances) otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .core import MetadataMissingError, Problem, ProblemStats, stream

__all__ = [
    "RidgeSpec",
    "LogisticSpec",
    "gen_ridge",
    "gen_logistic",
    "ridge_from_data",
    "logistic_from_data",
    "sigma_star",
    "sigma_one",
    "problem_to_json",
    "problem_from_json",
    "save_problem",
    "load_problem",
]


@dataclass(frozen=True)
class RidgeSpec:
    """Generator spec for a ridge problem.

    ``spectrum`` selects the singular-value layout of A: "log" spaces
    s_max/cond .. s_max log-uniformly, "uniform" spaces them linearly
    (e.g. cond=10, s_max=10 gives the 1.0 .. 10.0 heterogeneous spectrum).
    """

    n: int
    d: int
    cond: float
    lambda_r: float
    seed: int
    spectrum: str = "log"
    s_max: float = 1.0

    def __post_init__(self):
        _validate_spec(self)


@dataclass(frozen=True)
class LogisticSpec:
    """Generator spec for an l2-regularized logistic problem with +-1 labels."""

    n: int
    d: int
    cond: float
    lambda_r: float
    seed: int
    spectrum: str = "log"
    s_max: float = 1.0

    def __post_init__(self):
        _validate_spec(self)


def _validate_spec(spec) -> None:
    if spec.n < 1 or spec.d < 1:
        raise ValueError("n and d must be >= 1")
    if spec.cond < 1:
        raise ValueError(f"cond must be >= 1, got {spec.cond}")
    if spec.lambda_r < 0:
        raise ValueError(f"lambda_r must be >= 0, got {spec.lambda_r}")
    if spec.spectrum not in ("log", "uniform"):
        raise ValueError(f"unknown spectrum kind {spec.spectrum!r}")
    if min(spec.n, spec.d) == 1 and spec.cond != 1.0:
        raise ValueError("a rank-1 matrix has exactly one singular value; cond must be 1")
    if spec.s_max <= 0:
        raise ValueError("s_max must be positive")


def _random_matrix(spec) -> tuple[np.ndarray, np.ndarray]:
    """A = U diag(s) V^T with Haar-ish orthogonal U, V (QR of Gaussians)."""
    rng = stream(spec.seed)
    k = min(spec.n, spec.d)
    if spec.spectrum == "log":
        s = np.geomspace(spec.s_max / spec.cond, spec.s_max, k)
    else:
        s = np.linspace(spec.s_max / spec.cond, spec.s_max, k)
    U, _ = np.linalg.qr(rng.standard_normal((spec.n, k)))
    V, _ = np.linalg.qr(rng.standard_normal((spec.d, k)))
    A = (U * s) @ V.T
    gaussian = rng.standard_normal(spec.n)
    return A, gaussian


def gen_ridge(spec: RidgeSpec) -> Problem:
    """Generate a ridge problem with exact metadata from the given spec."""
    A, gaussian = _random_matrix(spec)
    return ridge_from_data(A, gaussian, spec.lambda_r, spec_echo=_spec_dict("ridge", spec))


def gen_logistic(spec: LogisticSpec) -> Problem:
    """Generate a logistic problem; labels are the signs of Gaussian draws."""
    A, gaussian = _random_matrix(spec)
    labels = np.where(gaussian >= 0, 1.0, -1.0)
    return logistic_from_data(A, labels, spec.lambda_r, spec_echo=_spec_dict("logistic", spec))


def _spec_dict(family: str, spec) -> dict:
    return {
        "family": family,
        "n": spec.n,
        "d": spec.d,
        "cond": spec.cond,
        "lambda_r": spec.lambda_r,
        "seed": spec.seed,
        "spectrum": spec.spectrum,
        "s_max": spec.s_max,
    }


def ridge_from_data(A, b, lam_r: float, spec_echo: Optional[dict] = None) -> Problem:
    """Assemble a ridge problem from explicit data, filling exact metadata.

    x* = (A^T A / n + lam_r I)^{-1} A^T b / n when the regularized Hessian is
    nonsingular; otherwise x*, mu are omitted and the problem is flagged
    degenerate.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n, d = A.shape
    if b.shape != (n,):
        raise ValueError("b must have shape (n,)")
    if lam_r < 0:
        raise ValueError("lam_r must be >= 0")

    row_sq = np.einsum("ij,ij->i", A, A)
    L_i = row_sq + lam_r
    H = A.T @ A / n + lam_r * np.eye(d)
    eigs = np.linalg.eigvalsh(H)
    mu = float(eigs[0])
    degenerate = mu <= max(1e-14 * float(eigs[-1]), 0.0)

    x_star = f_star = sig = f_inf = None
    mu_out = None
    if not degenerate:
        mu_out = mu
        x_star = np.linalg.solve(H, A.T @ b / n)
        residual = A @ x_star - b
        f_star = float(0.5 * residual @ residual / n + 0.5 * lam_r * (x_star @ x_star))
        f_inf = f_star
        f_at_star = 0.5 * residual**2 + 0.5 * lam_r * (x_star @ x_star)
        sig = float(np.mean(f_at_star - _ridge_component_infima(row_sq, b, lam_r)))
        sig = max(sig, 0.0)

    stats = ProblemStats(
        L_i=L_i,
        L_max=float(np.max(L_i)),
        mu=mu_out,
        x_star=x_star,
        f_star=f_star,
        sigma_star=sig,
        f_inf=f_inf,
        degenerate=degenerate,
    )

    def value(i: int, x: np.ndarray) -> float:
        r = float(A[i] @ x - b[i])
        return 0.5 * r * r + 0.5 * lam_r * float(x @ x)

    def grad(i: int, x: np.ndarray) -> np.ndarray:
        r = float(A[i] @ x - b[i])
        return r * A[i] + lam_r * x

    return Problem(
        n=n, d=d, component_value=value, component_grad=grad, stats=stats,
        kind="ridge", A=A, b=b, lam_r=float(lam_r), spec=spec_echo or {},
    )


def _ridge_component_infima(row_sq: np.ndarray, b: np.ndarray, lam_r: float) -> np.ndarray:
    """Closed-form inf_x f_i: 1/2 b_i^2 lam_r / (lam_r + ||a_i||^2)."""
    den = lam_r + row_sq
    out = np.where(den > 0, 0.5 * b**2 * lam_r / np.where(den > 0, den, 1.0), 0.5 * b**2)
    return out


# Logistic helpers. z is the margin b_i * a_i . x; the 1/2 prefactor matches
# the (1/2n) finite-sum scaling of the loss.


def _log1pexp(z):
    """log(1 + exp(z)) without overflow."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    small = z <= 30.0
    out[small] = np.log1p(np.exp(z[small]))
    out[~small] = z[~small]
    return out


def _sigmoid(z):
    """1 / (1 + exp(-z)), stable for either sign."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_from_data(A, labels, lam_r: float, spec_echo: Optional[dict] = None) -> Problem:
    """Assemble a logistic problem; x* (when lam_r > 0) by full-gradient descent."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    n, d = A.shape
    if labels.shape != (n,):
        raise ValueError("labels must have shape (n,)")
    if not np.all(np.abs(labels) == 1.0):
        raise ValueError("labels must be in {-1, +1}")
    if lam_r < 0:
        raise ValueError("lam_r must be >= 0")

    row_sq = np.einsum("ij,ij->i", A, A)
    L_i = row_sq / 8.0 + lam_r

    x_star = f_star = sig = f_inf = None
    mu = None
    degenerate = lam_r <= 0
    if lam_r > 0:
        mu = float(lam_r)
        x_star = _logistic_x_star(A, labels, lam_r)
        z = labels * (A @ x_star)
        f_at_star = 0.5 * _log1pexp(-z) + 0.5 * lam_r * (x_star @ x_star)
        f_star = float(np.mean(f_at_star))
        f_inf = f_star
        sig = float(np.mean(f_at_star - _logistic_component_infima(row_sq, lam_r)))
        sig = max(sig, 0.0)

    stats = ProblemStats(
        L_i=L_i,
        L_max=float(np.max(L_i)),
        mu=mu,
        x_star=x_star,
        f_star=f_star,
        sigma_star=sig,
        f_inf=f_inf,
        degenerate=degenerate,
    )

    def value(i: int, x: np.ndarray) -> float:
        z = labels[i] * float(A[i] @ x)
        return 0.5 * float(_log1pexp(-z)) + 0.5 * lam_r * float(x @ x)

    def grad(i: int, x: np.ndarray) -> np.ndarray:
        z = labels[i] * float(A[i] @ x)
        return (-0.5 * labels[i] * float(_sigmoid(-z))) * A[i] + lam_r * x

    return Problem(
        n=n, d=d, component_value=value, component_grad=grad, stats=stats,
        kind="logistic", A=A, b=labels, lam_r=float(lam_r), spec=spec_echo or {},
    )


def _logistic_x_star(A, labels, lam_r, grad_tol: float = 1e-10, max_iters: int = 10**6):
    """Full-gradient descent to gradient norm <= grad_tol (strongly convex, lam_r > 0)."""
    n, d = A.shape
    L_full = float(np.linalg.norm(A, 2) ** 2) / (8.0 * n) + lam_r
    step = 1.0 / L_full
    x = np.zeros(d)
    for _ in range(max_iters):
        z = labels * (A @ x)
        g = A.T @ (-0.5 * labels * _sigmoid(-z)) / n + lam_r * x
        if float(np.linalg.norm(g)) <= grad_tol:
            return x
        x = x - step * g
    raise RuntimeError(f"logistic x* solve did not reach grad norm {grad_tol} in {max_iters} iterations")


def _logistic_component_infima(row_sq: np.ndarray, lam_r: float) -> np.ndarray:
    """inf_x f_i by 1-D minimization along x = s * b_i a_i (exact reduction)."""
    half_log2 = 0.5 * np.log(2.0)
    out = np.empty_like(row_sq)
    for i, q in enumerate(row_sq):
        if q <= 0:
            out[i] = half_log2  # constant logistic term, minimized at x = 0
        elif lam_r == 0:
            out[i] = 0.0  # infimum as the margin grows, not attained
        else:
            res = minimize_scalar(
                lambda s: 0.5 * float(_log1pexp(-s * q)) + 0.5 * lam_r * s * s * q,
                bounds=(0.0, 0.5 / lam_r),
                method="bounded",
                options={"xatol": 1e-13},
            )
            out[i] = float(res.fun)
    return out


def sigma_star(problem: Problem) -> float:
    """Average optimal-point residual (1/n) sum_i (f_i(x*) - f_i*).

    Ridge uses the closed-form component infima; logistic minimizes each
    component numerically (exact 1-D reduction). Requires x*.
    """
    st = problem.stats
    if st.x_star is None:
        raise MetadataMissingError("sigma_star requires x*; problem metadata lacks it")
    if problem.kind == "ridge":
        row_sq = np.einsum("ij,ij->i", problem.A, problem.A)
        infima = _ridge_component_infima(row_sq, problem.b, problem.lam_r)
    elif problem.kind == "logistic":
        row_sq = np.einsum("ij,ij->i", problem.A, problem.A)
        infima = _logistic_component_infima(row_sq, problem.lam_r)
    else:
        raise MetadataMissingError(f"no component-infimum rule for problem kind {problem.kind!r}")
    vals = np.array([problem.component_value(i, st.x_star) for i in range(problem.n)])
    return max(float(np.mean(vals - infima)), 0.0)


def sigma_one(problem: Problem) -> float:
    """(1/n) sum_i ||grad f_i(x*)||^2, the optimal-point gradient spread."""
    st = problem.stats
    if st.x_star is None:
        raise MetadataMissingError("sigma_one requires x*; problem metadata lacks it")
    total = 0.0
    for i in range(problem.n):
        gi = problem.component_grad(i, st.x_star)
        total += float(gi @ gi)
    return total / problem.n


# JSON container. Floats serialize via repr so the round trip is exact and
# replays are byte-identical within an environment.


def problem_to_json(problem: Problem) -> dict:
    if problem.kind not in ("ridge", "logistic"):
        raise ValueError("only dense ridge/logistic problems serialize to JSON")
    return {
        "family": problem.kind,
        "spec": problem.spec,
        "lambda_r": problem.lam_r,
        "A_rows": [list(map(float, row)) for row in problem.A],
        "b": list(map(float, problem.b)),
    }


def problem_from_json(payload: dict) -> Problem:
    A = np.array(payload["A_rows"], dtype=np.float64)
    b = np.array(payload["b"], dtype=np.float64)
    lam_r = float(payload["lambda_r"])
    spec_echo = payload.get("spec") or {}
    if payload["family"] == "ridge":
        return ridge_from_data(A, b, lam_r, spec_echo=spec_echo)
    if payload["family"] == "logistic":
        return logistic_from_data(A, b, lam_r, spec_echo=spec_echo)
    raise ValueError(f"unknown problem family {payload['family']!r}")


def save_problem(problem: Problem, path) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_json(problem), fh)


def load_problem(path) -> Problem:
    with open(path) as fh:
        return problem_from_json(json.load(fh))
