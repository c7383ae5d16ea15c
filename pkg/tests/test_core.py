import numpy as np
import pytest

from samopt import (
    NumericOverflowError,
    Problem,
    ProblemStats,
    SamplingVector,
    eval_loss,
    grad_full,
    grad_stoch,
    ridge_from_data,
    logistic_from_data,
    stream,
    uniform_single_element,
    single_element,
)
from samopt.sampling import draw

from oracles import central_diff_grad


def identity_ridge(n):
    return ridge_from_data(np.eye(n), np.zeros(n), 0.0)


def test_loss_zero_at_origin():
    p = identity_ridge(4)
    assert eval_loss(p, np.zeros(4)) == 0.0


def test_loss_basis_vector():
    n = 5
    p = identity_ridge(n)
    e1 = np.zeros(n)
    e1[0] = 1.0
    assert eval_loss(p, e1) == pytest.approx(1.0 / (2 * n), rel=1e-15)


def test_logistic_loss_at_zero(small_logistic):
    # every margin is 0, so each component contributes log(2)/2
    val = eval_loss(small_logistic, np.zeros(small_logistic.d))
    assert val == pytest.approx(0.5 * np.log(2.0), rel=1e-14)


def test_grad_full_identity_ridge():
    n = 6
    p = identity_ridge(n)
    x = np.arange(1.0, n + 1.0)
    np.testing.assert_allclose(grad_full(p, x), x / n, rtol=1e-15)


def test_grad_full_vanishes_at_minimizer(small_ridge):
    g = grad_full(small_ridge, small_ridge.stats.x_star)
    assert np.linalg.norm(g) <= 1e-10


@pytest.mark.parametrize("fixture", ["small_ridge", "small_logistic"])
def test_gradient_matches_finite_differences(fixture, request):
    problem = request.getfixturevalue(fixture)
    rng = stream(100)
    for _ in range(5):
        x = rng.standard_normal(problem.d)
        g = grad_full(problem, x)
        g_fd = central_diff_grad(lambda y: eval_loss(problem, y), x)
        np.testing.assert_allclose(g, g_fd, rtol=1e-6, atol=1e-9)


def test_component_gradients_match_finite_differences(small_ridge, small_logistic):
    rng = stream(101)
    for problem in (small_ridge, small_logistic):
        for i in (0, problem.n - 1):
            x = rng.standard_normal(problem.d)
            g = problem.component_grad(i, x)
            g_fd = central_diff_grad(lambda y: problem.component_value(i, y), x)
            np.testing.assert_allclose(g, g_fd, rtol=1e-6, atol=1e-8)


def test_mean_of_components_matches_loss(small_ridge):
    rng = stream(102)
    x = rng.standard_normal(small_ridge.d)
    mean = np.mean([small_ridge.component_value(i, x) for i in range(small_ridge.n)])
    assert eval_loss(small_ridge, x) == pytest.approx(mean, rel=1e-12)


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_overflow_names_component():
    p = identity_ridge(3)
    with pytest.raises(NumericOverflowError) as err:
        eval_loss(p, np.full(3, 1e200))
    assert err.value.component == 0
    assert "component 0" in str(err.value)


def test_grad_stoch_full_batch_equals_full(small_ridge):
    rng = stream(103)
    x = rng.standard_normal(small_ridge.d)
    v = SamplingVector.full(small_ridge.n)
    np.testing.assert_array_equal(grad_stoch(small_ridge, x, v), grad_full(small_ridge, x))


def test_grad_stoch_single_element(small_ridge):
    rng = stream(104)
    x = rng.standard_normal(small_ridge.d)
    n = small_ridge.n
    # uniform: v = n e_i  ->  grad f_i
    v = SamplingVector(indices=np.array([3]), weights=np.array([float(n)]))
    np.testing.assert_allclose(grad_stoch(small_ridge, x, v), small_ridge.component_grad(3, x), rtol=1e-15)
    # importance with probability p_i: v = e_i / p_i  ->  grad f_i / (n p_i)
    p_i = 0.2
    v = SamplingVector(indices=np.array([5]), weights=np.array([1.0 / p_i]))
    np.testing.assert_allclose(
        grad_stoch(small_ridge, x, v), small_ridge.component_grad(5, x) / (n * p_i), rtol=1e-15
    )


def test_grad_stoch_index_out_of_range(small_ridge):
    v = SamplingVector(indices=np.array([small_ridge.n]), weights=np.array([1.0]))
    with pytest.raises(IndexError):
        grad_stoch(small_ridge, np.zeros(small_ridge.d), v)


def test_unbiasedness_over_many_draws(small_ridge):
    """Empirical mean of g over 1e5 draws within 4 standard errors of grad f."""
    problem = small_ridge
    n, d = problem.n, problem.d
    rng_pts = stream(105)
    p = np.linspace(1.0, 2.0, n)
    p /= p.sum()
    scheme = single_element(p)
    M = 100_000
    for _ in range(10):
        x = rng_pts.standard_normal(d)
        grads = np.vstack([problem.component_grad(i, x) / (n * p[i]) for i in range(n)])
        idx = rng_pts.choice(n, size=M, p=p)
        counts = np.bincount(idx, minlength=n).astype(float)
        emp_mean = counts @ grads / M
        # componentwise SE from the exact per-outcome values
        second = (p[:, None] * grads**2).sum(axis=0)
        se = np.sqrt(np.maximum(second - (p[:, None] * grads).sum(axis=0) ** 2, 0.0) / M)
        diff = np.abs(emp_mean - grad_full(problem, x))
        assert np.all(diff <= 4.0 * se + 1e-12)
    # the scheme's own draw agrees with the estimator definition
    v = draw(scheme, stream(106))
    i = int(v.indices[0])
    assert v.weights[0] == pytest.approx(1.0 / p[i], rel=1e-15)


def test_stream_splitting_reproducible():
    a = stream(42, 3).standard_normal(5)
    b = stream(42, 3).standard_normal(5)
    c = stream(42, 4).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_problem_stats_validation():
    with pytest.raises(ValueError):
        ProblemStats(L_i=np.array([1.0, 2.0]), L_max=1.5)
    with pytest.raises(ValueError):
        ProblemStats(L_i=np.array([1.0]), L_max=1.0, sigma_star=-0.1)


def test_sampling_vector_validation():
    with pytest.raises(ValueError):
        SamplingVector(indices=np.array([0]), weights=np.array([0.0]))
    with pytest.raises(ValueError):
        SamplingVector(indices=np.array([0]), weights=None)
    v = SamplingVector.full(10)
    assert v.full_batch and v.indices is None


def test_pl_inequality_holds_at_random_points(small_ridge):
    """||grad f||^2 >= 2 mu (f - f*) with 1e-9 absolute slack, 1000 points."""
    st = small_ridge.stats
    rng = stream(107)
    for _ in range(1000):
        x = st.x_star + rng.standard_normal(small_ridge.d) * 3.0
        lhs = float(np.linalg.norm(grad_full(small_ridge, x)) ** 2)
        rhs = 2.0 * st.mu * (eval_loss(small_ridge, x) - st.f_star)
        assert lhs >= rhs - 1e-9
