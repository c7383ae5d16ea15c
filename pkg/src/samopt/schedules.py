"""Step-size selection rules derived from the convergence guarantees.

Three sources of (rho_t, gamma_t, lambda_t):

* PL constant steps: for a mu-PL objective with expected-residual constants
  (A, B, C) and component smoothness bound L_max, the largest admissible
  perturbation radius is

      rho* = mu / (L_max (mu + 2 [B mu + A] (1 - lam)^2))

  and, at an operating rho <= rho*,

      gamma*(rho) = (mu - L_max rho (mu + 2 [B mu + A] (1 - lam)^2))
                    / (2 L_max (B mu + A) [2 L_max^2 rho^2 (1 - lam)^2 + 1]).

  These give E[f(x^t) - f*] <= (1 - gamma mu)^t [f(x^0) - f*] + N with

      N = (L_max / mu) (C gamma + rho (1 + 2 gamma L_max^2 rho) [lam^2 + C (1 - lam)^2]).

* PL decreasing steps: rho_t = min{1/(2t+1), rho*} and
  gamma_t = min{(2t+1)/((t+1)^2 mu), gamma*}, which trade the linear rate for
  O(1/t) convergence to the exact solution.

* Non-convex horizon steps: for a target stationarity eps over T iterations,
  rho and gamma are each the minimum of a fixed list of terms (see
  :func:`nonconvex_steps`), and :func:`nonconvex_min_iters` gives the matching
  lower bound on T.

Vanishing denominators follow the 1/0 = +inf convention and are then clamped
by configurable caps (default 1/L_max) so runs stay finite; clamping is
recorded in the provenance tag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sampling import ERConstants

__all__ = [
    "PLRequiredError",
    "PLRates",
    "StepPlan",
    "pl_constant_steps",
    "pl_decreasing_steps",
    "nonconvex_steps",
    "nonconvex_min_iters",
    "lambda_schedule",
]


class PLRequiredError(ValueError):
    """The operation needs a positive PL constant mu."""


def _ratio(num: float, den: float) -> float:
    """num / den with the 1/0 = +inf convention (num >= 0)."""
    return num / den if den > 0 else math.inf


def _prod(*factors: float) -> float:
    """Product where a zero factor kills the term even against +inf."""
    if any(f == 0.0 for f in factors):
        return 0.0
    out = 1.0
    for f in factors:
        out *= f
    return out


@dataclass(frozen=True)
class PLRates:
    """Constant-step parameters and guarantees for a mu-PL objective.

    ``rho_star`` is the admissible bound; ``rho`` the operating radius
    (default rho*/2, where gamma*(rho) stays strictly positive); ``gamma_star``
    the step evaluated at ``rho`` after cap clamping; ``N`` the additive
    convergence floor; ``rate`` the contraction factor 1 - gamma mu.
    """

    rho_star: float
    rho: float
    gamma_star: float
    N: float
    rate: float
    mu: float
    lam: float
    clamped: bool
    provenance: str


def pl_constant_steps(
    c: ERConstants,
    L_max: float,
    mu: float,
    lam: float,
    rho: Optional[float] = None,
    rho_fraction: float = 0.5,
    gamma_cap: Optional[float] = None,
) -> PLRates:
    """Constant (rho, gamma) and neighborhood N for a mu-PL objective.

    ``rho`` defaults to ``rho_fraction * rho_star`` (at rho = rho* the gamma
    numerator vanishes). ``gamma_cap`` defaults to 1/L_max; pass math.inf to
    disable clamping and obtain the raw formula value.
    """
    if mu <= 0:
        raise PLRequiredError(f"PL constant mu must be positive, got {mu}")
    if L_max <= 0:
        raise ValueError(f"L_max must be positive, got {L_max}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")

    noise = c.B * mu + c.A
    one_m = (1.0 - lam) ** 2
    rho_star = mu / (L_max * (mu + 2.0 * noise * one_m))
    if rho is None:
        if not 0.0 <= rho_fraction < 1.0:
            raise ValueError("rho_fraction must lie in [0, 1)")
        rho = rho_fraction * rho_star
    if rho < 0 or rho > rho_star * (1.0 + 1e-12):
        raise ValueError(f"rho must lie in [0, rho*={rho_star}], got {rho}")

    num = mu - L_max * rho * (mu + 2.0 * noise * one_m)
    den = 2.0 * L_max * noise * (2.0 * L_max**2 * rho**2 * one_m + 1.0)
    gamma_raw = _ratio(num, den)

    cap = 1.0 / L_max if gamma_cap is None else gamma_cap
    clamped = gamma_raw > cap
    gamma = min(gamma_raw, cap)
    if gamma <= 0:
        raise ValueError("gamma collapsed to zero; pick rho strictly below rho*")

    N = (L_max / mu) * (
        _prod(c.C, gamma)
        + _prod(rho, 1.0 + _prod(2.0, gamma, L_max**2, rho), lam**2 + _prod(c.C, one_m))
    )
    tag = f"pl-constant(rho={rho:.6g},gamma={gamma:.6g}{',clamped' if clamped else ''})"
    return PLRates(
        rho_star=rho_star, rho=rho, gamma_star=gamma, N=N,
        rate=1.0 - gamma * mu, mu=mu, lam=lam, clamped=clamped, provenance=tag,
    )


def pl_decreasing_steps(t: int, rates: PLRates, mu: float) -> tuple[float, float]:
    """(rho_t, gamma_t) of the O(1/t) schedule, capped by the constant-step pair."""
    if t < 0:
        raise ValueError("t must be >= 0")
    rho_t = min(1.0 / (2.0 * t + 1.0), rates.rho_star)
    gamma_t = min((2.0 * t + 1.0) / ((t + 1.0) ** 2 * mu), rates.gamma_star)
    return rho_t, gamma_t


def nonconvex_steps(
    eps: float,
    lam: float,
    L_max: float,
    c: ERConstants,
    T: int,
    delta0: Optional[float] = None,
    rho_cap: Optional[float] = None,
    gamma_cap: Optional[float] = None,
) -> tuple[float, float]:
    """Horizon-dependent (rho, gamma) guaranteeing min_t E||grad f(x^t)|| <= eps.

    Each value is the exact minimum of its term list with the 1/0 = +inf
    convention, then clamped by the caps (default 1/L_max; pass math.inf to
    disable). ``delta0`` does not enter these formulas (only the companion
    iteration bound uses it) and is accepted for interface symmetry.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    one_m = (1.0 - lam) ** 2
    mix = c.C * one_m + lam**2

    rho = min(
        1.0 / (4.0 * L_max),
        _ratio(1.0, 8.0 * c.B * L_max * one_m),
        1.0 / math.sqrt(T),
        _ratio(eps**2, 12.0 * L_max * mix),
    )
    gamma = min(
        _ratio(1.0, 8.0 * c.B * L_max),
        _ratio(1.0, 2.0 * L_max * (1.0 - lam) * math.sqrt(3.0 * c.A * L_max)),
        _ratio(1.0, 6.0 * L_max * c.A * one_m * math.sqrt(T)),
        _ratio(1.0, math.sqrt(6.0 * c.A * L_max * T)),
        _ratio(eps**2, 24.0 * L_max**3 * mix),
        _ratio(eps**2, 12.0 * L_max * c.C),
    )
    rho = min(rho, 1.0 / L_max if rho_cap is None else rho_cap)
    gamma = min(gamma, 1.0 / L_max if gamma_cap is None else gamma_cap)
    return rho, gamma


def nonconvex_min_iters(eps: float, delta0: float, L_max: float, c: ERConstants, lam: float) -> int:
    """Smallest integer T admitted by the non-convex guarantee (exact ceiling)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if delta0 < 0:
        raise ValueError("delta0 must be >= 0")
    one_m = 1.0 - lam
    terms = (
        96.0 * c.B,
        24.0 * one_m * math.sqrt(3.0 * L_max * c.A),
        5184.0 * L_max * c.A**2 * one_m**4 * delta0 / eps**2,
        864.0 * delta0 * c.A / eps**2,
        144.0 * c.C / eps**2,
        288.0 * L_max**2 * one_m**2 / eps**2,
    )
    return math.ceil(delta0 * L_max / eps**2 * max(terms))


def lambda_schedule(kind: str, t: int, value: Optional[float] = None) -> float:
    """Normalization blend at (1-based) iteration t.

    const -> value; inv_t -> 1/t; one_minus_inv_t -> 1 - 1/t (starts fully
    unnormalized and approaches the normalized update).
    """
    if kind == "const":
        if value is None or not 0.0 <= value <= 1.0:
            raise ValueError(f"const schedule needs a value in [0, 1], got {value}")
        return float(value)
    if t < 1:
        raise ValueError(f"time-varying schedules need t >= 1, got {t}")
    if kind == "inv_t":
        return 1.0 / t
    if kind == "one_minus_inv_t":
        return 1.0 - 1.0 / t
    raise ValueError(f"unknown lambda schedule kind {kind!r}")


@dataclass(frozen=True)
class StepPlan:
    """Evaluable (rho_t, gamma_t, lambda_t) schedules with provenance.

    ``rho_at``/``gamma_at`` take the 0-based iteration counter. Time-varying
    lambda kinds are evaluated at t + 1, matching their 1-based definition
    (one_minus_inv_t gives 0 on the very first iteration).
    """

    rho_kind: str  # "const" | "pl_decreasing"
    rho_value: float  # constant value, or the rho* cap for pl_decreasing
    gamma_kind: str
    gamma_value: float  # constant value, or the gamma* cap for pl_decreasing
    mu: Optional[float]
    lam_kind: str  # "const" | "inv_t" | "one_minus_inv_t"
    lam_value: Optional[float]
    provenance: str

    def __post_init__(self):
        if self.rho_kind not in ("const", "pl_decreasing") or self.gamma_kind not in ("const", "pl_decreasing"):
            raise ValueError("unknown schedule kind")
        if self.rho_value < 0:
            raise ValueError("rho must be >= 0")
        if self.gamma_value <= 0:
            raise ValueError("gamma must be > 0")
        if "pl_decreasing" in (self.rho_kind, self.gamma_kind) and (self.mu is None or self.mu <= 0):
            raise ValueError("decreasing schedules need mu > 0")
        if self.lam_kind == "const" and not (self.lam_value is not None and 0.0 <= self.lam_value <= 1.0):
            raise ValueError("constant lambda needs a value in [0, 1]")

    @staticmethod
    def constant(rho: float, gamma: float, lam: float, provenance: str = "manual") -> "StepPlan":
        return StepPlan("const", rho, "const", gamma, None, "const", lam, provenance)

    @staticmethod
    def from_pl_rates(rates: PLRates, decreasing: bool = False) -> "StepPlan":
        if decreasing:
            return StepPlan(
                "pl_decreasing", rates.rho_star, "pl_decreasing", rates.gamma_star,
                rates.mu, "const", rates.lam, f"pl-decreasing({rates.provenance})",
            )
        return StepPlan(
            "const", rates.rho, "const", rates.gamma_star,
            rates.mu, "const", rates.lam, rates.provenance,
        )

    def with_lambda(self, kind: str, value: Optional[float] = None) -> "StepPlan":
        lambda_schedule(kind, 1, value)  # validate
        tag = self.provenance + f"+lambda:{kind}"
        return StepPlan(self.rho_kind, self.rho_value, self.gamma_kind, self.gamma_value,
                        self.mu, kind, value, tag)

    def rho_at(self, t: int) -> float:
        if self.rho_kind == "const":
            return self.rho_value
        return min(1.0 / (2.0 * t + 1.0), self.rho_value)

    def gamma_at(self, t: int) -> float:
        if self.gamma_kind == "const":
            return self.gamma_value
        return min((2.0 * t + 1.0) / ((t + 1.0) ** 2 * self.mu), self.gamma_value)

    def lambda_at(self, t: int) -> float:
        if self.lam_kind == "const":
            return self.lam_value
        return lambda_schedule(self.lam_kind, t + 1)

    def arrays(self, start: int, count: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized schedule values for iterations start .. start+count-1."""
        t = np.arange(start, start + count, dtype=np.float64)
        if self.rho_kind == "const":
            rho = np.full(count, self.rho_value)
        else:
            rho = np.minimum(1.0 / (2.0 * t + 1.0), self.rho_value)
        if self.gamma_kind == "const":
            gamma = np.full(count, self.gamma_value)
        else:
            gamma = np.minimum((2.0 * t + 1.0) / ((t + 1.0) ** 2 * self.mu), self.gamma_value)
        if self.lam_kind == "const":
            lam = np.full(count, self.lam_value)
        elif self.lam_kind == "inv_t":
            lam = 1.0 / (t + 1.0)
        else:
            lam = 1.0 - 1.0 / (t + 1.0)
        return rho, gamma, lam
