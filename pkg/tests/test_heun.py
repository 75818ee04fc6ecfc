import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.special import hyp2f1

from heunqp.errors import BranchUnavailableError, DomainError, PoleProximityError
from heunqp.heun import (
    HeunParams,
    frobenius_compare,
    frobenius_series,
    from_canonical,
    pullback_solution,
    relative_residual_canonical,
    relative_residual_elliptic,
    second_branch_params,
    series_value,
    to_canonical,
)


def gauss_case(a, b, g, c=2.5):
    # eps = 0 and q = alpha beta c reduce the equation to Gauss's, solved by 2F1(a, b; g; x)
    return HeunParams(alpha=a, beta=b, gamma=g, delta=a + b + 1 - g, epsilon=0.0, q=a * b * c, c=c)


def canonical_rhs(p: HeunParams):
    g, d, e, c = (complex(getattr(p, k)) for k in ("gamma", "delta", "epsilon", "c"))
    ab, q = complex(p.alpha) * complex(p.beta), complex(p.q)

    def rhs(x, u):
        return [u[1], -(g / x + d / (x - 1) + e / (x - c)) * u[1] - (ab * x - q) / (x * (x - 1) * (x - c)) * u[0]]

    return rhs


def test_constraint_is_enforced():
    with pytest.raises(DomainError):
        HeunParams(alpha=1, beta=2, gamma=1, delta=1, epsilon=1, q=0, c=2)
    with pytest.raises(DomainError):
        HeunParams(alpha=0.5, beta=0.5, gamma=1, delta=0.5, epsilon=0.5, q=0, c=1)


@given(st.floats(-2.5, 2.5), st.floats(-2.5, 2.5), st.floats(0.3, 2.7))
def test_series_reproduces_gauss_hypergeometric(a, b, g):
    p = gauss_case(a, b, g)
    x = np.array([0.05, 0.1, 0.2])
    got = series_value(frobenius_series(p, 80), x)
    assert np.allclose(got, hyp2f1(a, b, g, x), rtol=1e-10, atol=1e-12)


def test_series_against_independent_integration():
    p = HeunParams(alpha=0.3, beta=-0.9, gamma=0.7, delta=0.4, epsilon=-0.7, q=0.35, c=1.8)
    co = frobenius_series(p, 80)
    d1 = np.polynomial.polynomial.polyder(co)
    x0, x1 = 0.05, 0.3
    sol = solve_ivp(canonical_rhs(p), (x0, x1), [series_value(co, x0), series_value(d1, x0)],
                    method="DOP853", rtol=1e-12, atol=1e-14)
    assert abs(sol.y[0, -1] - series_value(co, x1)) < 1e-9


def test_second_branch_is_a_solution():
    p = HeunParams(alpha=0.3, beta=-0.9, gamma=0.7, delta=0.4, epsilon=-0.7, q=0.35, c=1.8)
    h = frobenius_series(second_branch_params(p), 80)
    d1, d2 = np.polynomial.polynomial.polyder(h), np.polynomial.polynomial.polyder(h, 2)
    g = 1 - p.gamma

    def G(x):
        H, H1, H2 = (series_value(c, x) for c in (h, d1, d2))
        return (x ** g * H, x ** g * (H1 + g * H / x),
                x ** g * (H2 + 2 * g * H1 / x + g * (g - 1) * H / x ** 2))

    x = np.linspace(0.05, 0.3, 12)
    assert np.max(relative_residual_canonical(p, G, x)) < 1e-10


def test_resonant_series_with_consistent_recurrence():
    # gamma = 0 and q = 0: the obstruction at the resonance vanishes
    p = HeunParams(alpha=0.4, beta=-0.4, gamma=0.0, delta=0.5, epsilon=0.5, q=0.0, c=2.0)
    co = frobenius_series(p, 40)
    assert co[1] == 0


def test_resonant_series_needing_a_logarithm():
    p = HeunParams(alpha=0.4, beta=-0.4, gamma=0.0, delta=0.5, epsilon=0.5, q=0.3, c=2.0)
    with pytest.raises(BranchUnavailableError, match="logarithm"):
        frobenius_series(p, 40)


def test_frobenius_compare_passes_for_a_mixed_solution():
    p = gauss_case(0.3, -0.6, 0.45)

    def G(x):
        x = np.asarray(x)
        # 2F1 plus a multiple of the exponent-(1-gamma) solution
        other = x ** (1 - 0.45) * hyp2f1(0.3 + 0.55, -0.6 + 0.55, 1.55, x)
        return hyp2f1(0.3, -0.6, 0.45, x) + 0.7 * other, None, None

    res = frobenius_compare(p, G)
    assert res.status == "pass" and res.max_rel_error < 1e-10


def test_frobenius_compare_labels_the_log_case_as_skip():
    p = HeunParams(alpha=0.4, beta=-0.4, gamma=0.0, delta=0.5, epsilon=0.5, q=0.3, c=2.0)
    x0 = 0.3
    sol = solve_ivp(canonical_rhs(p), (x0, 0.01), [1.0 + 0j, 0.2 + 0j], method="DOP853",
                    rtol=1e-12, atol=1e-14, dense_output=True)

    def G(x):
        return sol.sol(np.asarray(x))[0], None, None

    res = frobenius_compare(p, G)
    assert res.status == "skip"
    assert "gamma = 0" in res.reason and "logarithm" in res.reason


def test_frobenius_compare_fails_for_a_non_solution():
    p = gauss_case(0.3, -0.6, 0.45)
    res = frobenius_compare(p, lambda x: (np.exp(np.asarray(x)), None, None))
    assert res.status == "fail"


@given(st.floats(0.01, 0.99), st.floats(0.05, 0.95))
def test_chart_round_trip(m, frac):
    from heunqp.elliptic import ellipk

    y = frac * ellipk(m)
    assert math.isclose(from_canonical(to_canonical(y, m), m), y, rel_tol=1e-11)


def test_chart_domain():
    with pytest.raises(DomainError):
        to_canonical(3.0, 0.5)
    with pytest.raises(DomainError):
        from_canonical(1.2, 0.5)


def test_pullback_keeps_residual_small():
    # F(y) = 2F1(a, b; g; sn^2 y) solves the y-chart equation of the Gauss case
    m = 0.4
    a, b, g = 0.3, -0.6, 0.45
    p = gauss_case(a, b, g, c=1 / m)
    from heunqp.elliptic import ellipk, jacobi

    def F(y):
        s, c, d = jacobi(y, m)
        x = s * s
        xp = 2 * s * c * d
        xpp = 2 * (c * c * d * d - s * s * d * d - m * s * s * c * c)
        H = hyp2f1(a, b, g, x)
        H1 = a * b / g * hyp2f1(a + 1, b + 1, g + 1, x)
        H2 = a * (a + 1) * b * (b + 1) / (g * (g + 1)) * hyp2f1(a + 2, b + 2, g + 2, x)
        return H, H1 * xp, H2 * xp * xp + H1 * xpp

    y = np.linspace(0.05, 0.95, 50) * ellipk(m)
    assert np.max(relative_residual_elliptic(p, F, y, m)) < 1e-12
    x = to_canonical(y, m)
    assert np.max(relative_residual_canonical(p, pullback_solution(F, m), x)) < 1e-9


def test_pole_guard():
    p = gauss_case(0.3, -0.6, 0.45)
    with pytest.raises(PoleProximityError):
        relative_residual_canonical(p, lambda x: (x, x, x), np.array([1e-5, 0.2]))


def test_same_equation_ignores_alpha_beta_order():
    p = HeunParams(alpha=0.3, beta=-0.9, gamma=0.7, delta=0.4, epsilon=-0.7, q=0.35, c=1.8)
    swapped = HeunParams(alpha=-0.9, beta=0.3, gamma=0.7, delta=0.4, epsilon=-0.7, q=0.35, c=1.8)
    assert p.same_equation(swapped)
    assert not p.same_equation(HeunParams(alpha=0.3, beta=-0.9, gamma=0.7, delta=0.4, epsilon=-0.7, q=0.36, c=1.8))
