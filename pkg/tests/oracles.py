"""Independent reference implementations used as test oracles.

Everything here is coded separately from the package, term by term, so a
library regression cannot hide behind shared code. Infinity handling mirrors
the 1/0 = +inf convention; products with a zero factor drop the term.
"""

import math

import numpy as np

INF = math.inf


def central_diff_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def ref_sgd(component_grad, x0, indices, gamma):
    """Plain SGD with uniform single-element draws: x <- x - gamma grad f_i(x)."""
    x = np.array(x0, dtype=np.float64)
    for i in indices:
        x = x - gamma * component_grad(int(i), x)
    return x


def usam_step_ref(x, g, rho, gamma, grad_at):
    return x - gamma * grad_at(x + rho * g)


def sam_step_ref(x, g, rho, gamma, grad_at):
    return x - gamma * grad_at(x + rho * (g / np.linalg.norm(g)))


def _div(num, den):
    return num / den if den > 0 else INF


def _term(*factors):
    if any(f == 0.0 for f in factors):
        return 0.0
    out = 1.0
    for f in factors:
        out *= f
    return out


def rho_star_ref(A, B, C, L, mu, lam):
    return _div(mu, L * (mu + 2.0 * (B * mu + A) * (1.0 - lam) ** 2))


def gamma_star_ref(A, B, C, L, mu, lam, rho):
    num = mu - L * rho * (mu + 2.0 * (B * mu + A) * (1.0 - lam) ** 2)
    den = 2.0 * L * (B * mu + A) * (2.0 * L * L * rho * rho * (1.0 - lam) ** 2 + 1.0)
    return _div(num, den)


def neighborhood_ref(A, B, C, L, mu, lam, rho, gamma):
    bracket = lam * lam + _term(C, (1.0 - lam) ** 2)
    inner = 1.0 + _term(2.0, gamma, L * L, rho)
    return (L / mu) * (_term(C, gamma) + _term(rho, inner, bracket))


def rho_bar_ref(eps, lam, L, A, B, C, T):
    one_m = (1.0 - lam) ** 2
    terms = [
        1.0 / (4.0 * L),
        _div(1.0, 8.0 * B * L * one_m),
        1.0 / math.sqrt(T),
        _div(eps * eps, 12.0 * L * (C * one_m + lam * lam)),
    ]
    return min(terms)


def gamma_bar_ref(eps, lam, L, A, B, C, T):
    one_m = (1.0 - lam) ** 2
    terms = [
        _div(1.0, 8.0 * B * L),
        _div(1.0, 2.0 * L * (1.0 - lam) * math.sqrt(3.0 * A * L)),
        _div(1.0, 6.0 * L * A * one_m * math.sqrt(T)),
        _div(1.0, math.sqrt(6.0 * A * L * T)),
        _div(eps * eps, 24.0 * L ** 3 * (C * one_m + lam * lam)),
        _div(eps * eps, 12.0 * L * C),
    ]
    return min(terms)


def min_iters_ref(eps, delta0, L, A, B, C, lam):
    terms = [
        96.0 * B,
        24.0 * (1.0 - lam) * math.sqrt(3.0 * L * A),
        5184.0 * L * A * A * (1.0 - lam) ** 4 * delta0 / eps ** 2,
        864.0 * delta0 * A / eps ** 2,
        144.0 * C / eps ** 2,
        288.0 * L * L * (1.0 - lam) ** 2 / eps ** 2,
    ]
    return math.ceil(delta0 * L / eps ** 2 * max(terms))


def rel_err(a, b):
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def enum_second_moment(problem, p, x):
    """Exact E||g(x)||^2 for single-element sampling, by direct enumeration."""
    n = problem.n
    total = 0.0
    for i in range(n):
        gi = problem.component_grad(i, x) / (n * p[i])
        total += p[i] * float(gi @ gi)
    return total


def gd_minimize(f, grad, x0, step, tol=1e-12, max_iters=200_000):
    """Plain gradient descent to gradient norm <= tol; the long-run oracle."""
    x = np.array(x0, dtype=np.float64)
    for _ in range(max_iters):
        g = grad(x)
        if float(np.linalg.norm(g)) <= tol:
            break
        x = x - step * g
    return x
