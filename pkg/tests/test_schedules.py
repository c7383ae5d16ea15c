import math

import numpy as np
import pytest

from samopt import (
    ERConstants,
    PLRequiredError,
    StepPlan,
    lambda_schedule,
    nonconvex_min_iters,
    nonconvex_steps,
    pl_constant_steps,
    pl_decreasing_steps,
    stream,
)

import oracles


def det_constants():
    return ERConstants(0.0, 1.0, 0.0, "det")


def test_hand_substitution_example():
    # (A,B,C) = (0,1,0), lam=1, L=1, mu=0.5, rho=0.5
    rates = pl_constant_steps(det_constants(), 1.0, 0.5, 1.0, rho=0.5, gamma_cap=math.inf)
    assert rates.rho_star == pytest.approx(1.0)
    assert rates.gamma_star == pytest.approx(0.25)
    # independently evaluated N = (L/mu) * rho * (1 + 2 gamma L^2 rho) * lam^2
    assert rates.N == pytest.approx(2.0 * 0.5 * (1.0 + 2 * 0.25 * 0.5), rel=1e-15)
    assert rates.rate == pytest.approx(1.0 - 0.25 * 0.5)


def test_neighborhood_vanishes_without_noise_or_normalization():
    # lam = 0 and C = 0: every summand of N carries a factor C or lam^2
    rates = pl_constant_steps(ERConstants(0.3, 1.0, 0.0, "t"), 2.0, 0.4, 0.0)
    assert rates.N == 0.0


def test_rho_zero_recovers_sgd_step():
    c = ERConstants(0.5, 1.0, 0.2, "t")
    L, mu = 2.0, 0.3
    rates = pl_constant_steps(c, L, mu, 0.5, rho=0.0, gamma_cap=math.inf)
    assert rates.gamma_star == pytest.approx(mu / (2 * L * (c.B * mu + c.A)), rel=1e-15)


def test_sam_corollary_forms():
    # lam = 1: rho* = 1/L and gamma* = mu (1 - L rho) / (2 L (B mu + A))
    c = ERConstants(0.7, 2.0, 0.1, "t")
    L, mu = 1.5, 0.2
    rates = pl_constant_steps(c, L, mu, 1.0, rho=0.3, gamma_cap=math.inf)
    assert rates.rho_star == pytest.approx(1.0 / L, rel=1e-15)
    assert rates.gamma_star == pytest.approx(mu * (1 - L * 0.3) / (2 * L * (c.B * mu + c.A)), rel=1e-14)


def test_usam_corollary_forms():
    c = ERConstants(0.7, 2.0, 0.1, "t")
    L, mu, rho = 1.5, 0.2, 0.05
    rates = pl_constant_steps(c, L, mu, 0.0, rho=rho, gamma_cap=math.inf)
    noise = c.B * mu + c.A
    assert rates.rho_star == pytest.approx(mu / (L * (mu + 2 * noise)), rel=1e-15)
    expected = (mu - L * rho * (mu + 2 * noise)) / (2 * L * noise * (2 * L**2 * rho**2 + 1))
    assert rates.gamma_star == pytest.approx(expected, rel=1e-14)


def test_rho_star_monotone_in_noise_constants():
    rng = stream(300)
    for _ in range(100):
        L = float(rng.uniform(0.5, 3))
        mu = float(rng.uniform(0.01, 0.4))
        lam = float(rng.uniform(0, 1))
        A, B, C = rng.uniform(0.1, 2, size=3)
        base = pl_constant_steps(ERConstants(A, B, C, "t"), L, mu, lam)
        upA = pl_constant_steps(ERConstants(A * 2, B, C, "t"), L, mu, lam)
        upB = pl_constant_steps(ERConstants(A, B * 2, C, "t"), L, mu, lam)
        assert upA.rho_star <= base.rho_star + 1e-15
        assert upB.rho_star <= base.rho_star + 1e-15


def test_gamma_star_monotone_in_noise_and_rho():
    rng = stream(301)
    for _ in range(100):
        L = float(rng.uniform(0.5, 3))
        mu = float(rng.uniform(0.01, 0.4))
        lam = float(rng.uniform(0, 1))
        A, B, C = rng.uniform(0.1, 2, size=3)
        rho = 0.25 * oracles.rho_star_ref(A, 2 * B, C, L, mu, lam)  # feasible for all variants
        kw = dict(rho=rho, gamma_cap=math.inf)
        base = pl_constant_steps(ERConstants(A, B, C, "t"), L, mu, lam, **kw)
        upA = pl_constant_steps(ERConstants(A * 2, B, C, "t"), L, mu, lam, **kw)
        upB = pl_constant_steps(ERConstants(A, B * 2, C, "t"), L, mu, lam, **kw)
        upR = pl_constant_steps(ERConstants(A, B, C, "t"), L, mu, lam, rho=rho * 1.5, gamma_cap=math.inf)
        assert upA.gamma_star <= base.gamma_star + 1e-15
        assert upB.gamma_star <= base.gamma_star + 1e-15
        assert upR.gamma_star <= base.gamma_star + 1e-15


def test_requires_positive_mu():
    with pytest.raises(PLRequiredError):
        pl_constant_steps(det_constants(), 1.0, 0.0, 0.5)


def test_gamma_cap_clamps_infinite_step():
    # A = B = 0 makes the gamma denominator vanish: 1/0 = inf, clamped to 1/L
    rates = pl_constant_steps(ERConstants(0.0, 0.0, 0.1, "t"), 2.0, 0.5, 0.7)
    assert rates.clamped
    assert rates.gamma_star == pytest.approx(0.5)
    raw = pl_constant_steps(ERConstants(0.0, 0.0, 0.1, "t"), 2.0, 0.5, 0.7, gamma_cap=math.inf)
    assert math.isinf(raw.gamma_star)


def test_decreasing_examples():
    rates = pl_constant_steps(det_constants(), 1.0, 1.0, 0.5, gamma_cap=math.inf)
    object.__setattr__(rates, "rho_star", 0.1)
    object.__setattr__(rates, "gamma_star", 0.05)
    assert pl_decreasing_steps(0, rates, 1.0) == (0.1, 0.05)
    rho10, gamma10 = pl_decreasing_steps(10, rates, 1.0)
    assert rho10 == pytest.approx(1.0 / 21.0)
    assert gamma10 == 0.05  # 21/121 > 0.05


def test_decreasing_asymptotics():
    rates = pl_constant_steps(det_constants(), 1.0, 1.0, 0.5)
    t = 10**6
    rho_t, gamma_t = pl_decreasing_steps(t, rates, 1.0)
    assert rho_t == pytest.approx(1.0 / (2 * t), rel=1e-2)
    assert gamma_t == pytest.approx(2.0 / t, rel=1e-2)


def test_decreasing_below_constant_caps():
    c = ERConstants(0.5, 1.0, 0.2, "t")
    rates = pl_constant_steps(c, 2.0, 0.3, 0.5)
    for t in range(1, 2000, 17):
        rho_t, gamma_t = pl_decreasing_steps(t, rates, 0.3)
        assert rho_t <= rates.rho_star and gamma_t <= rates.gamma_star


def test_nonconvex_steps_lam_one():
    # lam = 1 drops every (1 - lam) term
    L, eps, T = 2.0, 0.05, 400
    c = ERConstants(1.0, 3.0, 0.7, "t")
    rho, gamma = nonconvex_steps(eps, 1.0, L, c, T, rho_cap=math.inf, gamma_cap=math.inf)
    assert rho == pytest.approx(min(1 / (4 * L), 1 / math.sqrt(T), eps**2 / (12 * L)))
    assert gamma == pytest.approx(min(
        1 / (8 * c.B * L), 1 / math.sqrt(6 * c.A * L * T),
        eps**2 / (24 * L**3), eps**2 / (12 * L * c.C),
    ))


def test_nonconvex_steps_zero_B_uses_infinity_convention():
    c = ERConstants(1.0, 0.0, 0.5, "t")
    rho, gamma = nonconvex_steps(0.1, 0.5, 1.0, c, 100, rho_cap=math.inf, gamma_cap=math.inf)
    # the 1/(8BL) terms are infinite, so other terms decide
    assert rho == pytest.approx(min(0.25, 0.1, 0.1**2 / (12 * (0.5 * 0.25 + 0.25))))
    assert math.isfinite(gamma)


def test_nonconvex_steps_large_eps_independent_of_eps():
    c = ERConstants(1.0, 1.0, 1.0, "t")
    r1, g1 = nonconvex_steps(1e6, 0.5, 1.0, c, 100, rho_cap=math.inf, gamma_cap=math.inf)
    r2, g2 = nonconvex_steps(1e7, 0.5, 1.0, c, 100, rho_cap=math.inf, gamma_cap=math.inf)
    assert r1 == r2 and g1 == g2


def test_min_iters_hand_example():
    # delta0=1, L=1, eps=0.1, (A,B,C)=(0,1,0), lam=1 -> 100 * 96 = 9600
    c = ERConstants(0.0, 1.0, 0.0, "t")
    assert nonconvex_min_iters(0.1, 1.0, 1.0, c, 1.0) == 9600


def test_min_iters_only_B_survives():
    c = ERConstants(0.0, 2.5, 0.0, "t")
    T = nonconvex_min_iters(0.2, 3.0, 1.5, c, 1.0)
    assert T == math.ceil(3.0 * 1.5 / 0.04 * 96 * 2.5)


def test_min_iters_delta0_quadratic_term():
    c = ERConstants(2.0, 0.0, 0.0, "t")
    eps, L, lam = 0.1, 1.0, 1.0
    # with lam=1 and B=C=0, only the 864 delta0 A / eps^2 term survives
    T1 = nonconvex_min_iters(eps, 1.0, L, c, lam)
    T2 = nonconvex_min_iters(eps, 2.0, L, c, lam)
    assert T2 == pytest.approx(4 * T1, rel=1e-9)


def test_lambda_schedule():
    assert lambda_schedule("one_minus_inv_t", 1) == 0.0
    assert lambda_schedule("inv_t", 1) == 1.0
    assert lambda_schedule("one_minus_inv_t", 1000) == pytest.approx(0.999)
    assert lambda_schedule("const", 0, value=0.3) == 0.3
    with pytest.raises(ValueError):
        lambda_schedule("inv_t", 0)
    with pytest.raises(ValueError):
        lambda_schedule("bogus", 1)
    with pytest.raises(ValueError):
        lambda_schedule("const", 1, value=1.5)


def test_step_plan_arrays_match_pointwise():
    c = ERConstants(0.5, 1.0, 0.2, "t")
    rates = pl_constant_steps(c, 2.0, 0.3, 0.5)
    for plan in (StepPlan.from_pl_rates(rates), StepPlan.from_pl_rates(rates, decreasing=True),
                 StepPlan.constant(0.1, 0.2, 0.3).with_lambda("one_minus_inv_t"),
                 StepPlan.constant(0.1, 0.2, 0.3).with_lambda("inv_t")):
        rho, gamma, lam = plan.arrays(5, 40)
        for j, t in enumerate(range(5, 45)):
            assert rho[j] == pytest.approx(plan.rho_at(t), rel=1e-15)
            assert gamma[j] == pytest.approx(plan.gamma_at(t), rel=1e-15)
            assert lam[j] == pytest.approx(plan.lambda_at(t), rel=1e-15)


def test_step_plan_validation():
    with pytest.raises(ValueError):
        StepPlan.constant(-0.1, 0.2, 0.3)
    with pytest.raises(ValueError):
        StepPlan.constant(0.1, 0.0, 0.3)
    with pytest.raises(ValueError):
        StepPlan.constant(0.1, 0.2, 1.7)
    plan = StepPlan.constant(0.1, 0.2, 0.0).with_lambda("one_minus_inv_t")
    assert plan.lambda_at(0) == 0.0  # starts unnormalized
    assert plan.lambda_at(9) == pytest.approx(0.9)
