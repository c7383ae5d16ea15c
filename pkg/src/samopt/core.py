"""Finite-sum problem abstraction, gradient oracles, and shared numeric conventions.

The objects here describe the minimization of f(x) = (1/n) * sum_i f_i(x)
through per-component value/gradient callables plus exact metadata (per-component
smoothness constants, PL constant, minimizer) when it is known in closed form.

Numeric conventions used throughout the package:

* all scalars are 64-bit floats;
* exact identities are tested at 1e-9 absolute unless stated otherwise;
* every randomized operation takes an explicit ``numpy.random.Generator``,
  derived via :func:`stream` so trials are reproducible and independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "NumericOverflowError",
    "MetadataMissingError",
    "ProblemStats",
    "Problem",
    "SamplingVector",
    "stream",
    "eval_loss",
    "grad_full",
    "grad_stoch",
]

# Gradient norms at or below this are treated as exactly stationary by the
# optimizer's normalization rule.
ZERO_GRAD_TOL = 1e-12


class NumericOverflowError(ArithmeticError):
    """A component produced a non-finite value or gradient."""

    def __init__(self, message: str, component: Optional[int] = None):
        super().__init__(message)
        self.component = component


class MetadataMissingError(ValueError):
    """An operation needs problem metadata (x*, f*, sigma*, ...) that is absent."""


def stream(base_seed: int, *path: int) -> np.random.Generator:
    """Derive an independent RNG stream from a base seed and an index path.

    ``stream(seed, t)`` for t = 0, 1, ... gives per-trial streams that are
    stable across runs and mutually independent (SeedSequence hashing).
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(base_seed), *map(int, path)))))


@dataclass(frozen=True)
class ProblemStats:
    """Exact metadata for a finite-sum problem.

    Attributes:
        L_i: per-component smoothness constants, shape (n,).
        L_max: max of ``L_i`` (validated).
        mu: PL constant of f, or None when no PL guarantee carries.
        x_star: minimizer of f, or None when unknown/non-unique.
        f_star: f(x*) when x_star is known.
        sigma_star: average optimal-point residual (1/n) * sum_i (f_i(x*) - f_i*).
        f_inf: infimum of f (equals f_star when the minimum is attained).
        degenerate: True when x*/mu were dropped (e.g. singular unregularized Hessian).
    """

    L_i: np.ndarray
    L_max: float
    mu: Optional[float] = None
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    sigma_star: Optional[float] = None
    f_inf: Optional[float] = None
    degenerate: bool = False

    def __post_init__(self):
        L_i = np.asarray(self.L_i, dtype=np.float64)
        object.__setattr__(self, "L_i", L_i)
        if L_i.ndim != 1 or L_i.size == 0:
            raise ValueError("L_i must be a non-empty 1-D array")
        if self.L_max != float(np.max(L_i)):
            raise ValueError(f"L_max={self.L_max} does not equal max(L_i)={np.max(L_i)}")
        if self.sigma_star is not None and self.sigma_star < 0:
            raise ValueError(f"sigma_star must be nonnegative, got {self.sigma_star}")
        if self.x_star is not None:
            object.__setattr__(self, "x_star", np.asarray(self.x_star, dtype=np.float64))


@dataclass(frozen=True)
class Problem:
    """A finite-sum objective f(x) = (1/n) * sum_i f_i(x) with component oracles.

    ``component_value(i, x)`` and ``component_grad(i, x)`` evaluate f_i and its
    gradient. Instances are immutable and safe to share across threads.

    Dense linear-model problems (ridge / logistic) additionally carry the
    data matrix payload (``kind``, ``A``, ``b``, ``lam_r``) which enables the
    compiled iteration kernels; generic problems leave those as None and run
    through the pure-Python engine.
    """

    n: int
    d: int
    component_value: Callable[[int, np.ndarray], float]
    component_grad: Callable[[int, np.ndarray], np.ndarray]
    stats: ProblemStats
    kind: Optional[str] = None
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    lam_r: float = 0.0
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be >= 1")
        if self.stats.L_i.shape != (self.n,):
            raise ValueError("stats.L_i must have shape (n,)")

    def f_reference(self) -> Optional[float]:
        """The best available lower reference for f: f* if known, else f^inf."""
        if self.stats.f_star is not None:
            return self.stats.f_star
        return self.stats.f_inf


@dataclass(frozen=True)
class SamplingVector:
    """A realized sampling vector v with E[v_i] = 1, stored sparse.

    Components not listed in ``indices`` have v_i = 0. The full batch is
    represented explicitly (``full_batch=True``, all v_i = 1) rather than as an
    n-long index list, so it cannot be misread as a sparse draw.
    """

    indices: Optional[np.ndarray]
    weights: Optional[np.ndarray]
    full_batch: bool = False

    def __post_init__(self):
        if self.full_batch:
            if self.indices is not None or self.weights is not None:
                raise ValueError("full-batch sampling vectors carry no sparse payload")
            return
        idx = np.asarray(self.indices, dtype=np.intp)
        w = np.asarray(self.weights, dtype=np.float64)
        if idx.shape != w.shape or idx.ndim != 1:
            raise ValueError("indices and weights must be matching 1-D arrays")
        if not np.all(w > 0):
            raise ValueError("sampling-vector weights must be strictly positive")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @staticmethod
    def full(n: int) -> "SamplingVector":
        return SamplingVector(indices=None, weights=None, full_batch=True)


def _check_point(problem: Problem, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.d,):
        raise ValueError(f"x must have shape ({problem.d},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericOverflowError("x contains non-finite entries")
    return x


def eval_loss(problem: Problem, x: np.ndarray) -> float:
    """f(x) = (1/n) * sum_i f_i(x). Raises naming the offending component on overflow."""
    x = _check_point(problem, x)
    total = 0.0
    for i in range(problem.n):
        fi = problem.component_value(i, x)
        if not np.isfinite(fi):
            raise NumericOverflowError(f"component {i} produced non-finite value {fi}", component=i)
        total += fi
    return total / problem.n


def grad_full(problem: Problem, x: np.ndarray) -> np.ndarray:
    """Full gradient (1/n) * sum_i grad f_i(x)."""
    x = _check_point(problem, x)
    acc = np.zeros(problem.d)
    for i in range(problem.n):
        gi = problem.component_grad(i, x)
        if not np.all(np.isfinite(gi)):
            raise NumericOverflowError(f"component {i} produced a non-finite gradient", component=i)
        acc += gi
    return acc / problem.n


def grad_stoch(problem: Problem, x: np.ndarray, v: SamplingVector) -> np.ndarray:
    """Sampled gradient estimate g(x) = (1/n) * sum_{i in v} v_i * grad f_i(x)."""
    x = _check_point(problem, x)
    if v.full_batch:
        return grad_full(problem, x)
    acc = np.zeros(problem.d)
    for i, w in zip(v.indices, v.weights):
        i = int(i)
        if not 0 <= i < problem.n:
            raise IndexError(f"sampling index {i} out of range [0, {problem.n})")
        gi = problem.component_grad(i, x)
        if not np.all(np.isfinite(gi)):
            raise NumericOverflowError(f"component {i} produced a non-finite gradient", component=i)
        acc += w * gi
    return acc / problem.n
