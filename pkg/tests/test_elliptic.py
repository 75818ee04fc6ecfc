import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import ellipj
from scipy.special import ellipk as scipy_ellipk

from heunqp.elliptic import (
    EllipticModulus,
    amplitude,
    ellipk,
    eval_jacobi,
    jacobi,
    phase_power_case1,
    phase_power_case3,
    quarter_periods,
    shifted_jacobi,
)
from heunqp.errors import DomainError

ms = st.floats(min_value=1e-3, max_value=0.999)
ys = st.floats(min_value=-50.0, max_value=50.0)


@given(ys, ms)
def test_pythagorean_identities(y, m):
    s, c, d = jacobi(y, m)
    assert abs(s * s + c * c - 1) < 1e-14
    assert abs(d * d + m * s * s - 1) < 1e-14


@given(ys, ms)
def test_agrees_with_scipy(y, m):
    s, c, d = jacobi(y, m)
    s2, c2, d2, _ = ellipj(y, m)
    assert np.allclose((s, c, d), (s2, c2, d2), atol=1e-12, rtol=0)


@given(ms)
def test_quarter_period_against_scipy(m):
    assert math.isclose(ellipk(m), float(scipy_ellipk(m)), rel_tol=1e-14)
    qp = quarter_periods(m)
    assert math.isclose(qp.Kprime, float(scipy_ellipk(1 - m)), rel_tol=1e-14)


@given(ys, ms)
def test_half_period_shifts(y, m):
    K = ellipk(m)
    s, c, d = jacobi(y, m)
    s2, c2, d2 = jacobi(y + 2 * K, m)
    assert np.allclose((s2, c2, d2), (-s, -c, d), atol=1e-12)
    s1, c1, d1 = jacobi(y + K, m)
    kp = math.sqrt(1 - m)
    assert np.allclose((s1, c1, d1), (c / d, -kp * s / d, kp / d), atol=1e-11)


@given(ys, ms)
def test_amplitude_is_continuous_through_periods(y, m):
    K = ellipk(m)
    assert math.isclose(amplitude(y + 2 * K, m), amplitude(y, m) + math.pi, abs_tol=1e-11)
    phi = amplitude(y, m)
    s, c, _ = jacobi(y, m)
    assert math.isclose(math.sin(phi), s, abs_tol=1e-13)
    assert math.isclose(math.cos(phi), c, abs_tol=1e-13)


def test_derivatives_by_central_differences():
    m, y, h = 0.6, np.linspace(0.1, 3.0, 25), 1e-5
    s, c, d = jacobi(y, m)
    sp, cp, dp = jacobi(y + h, m)
    sm, cm, dm = jacobi(y - h, m)
    assert np.allclose((sp - sm) / (2 * h), c * d, atol=1e-9)
    assert np.allclose((cp - cm) / (2 * h), -s * d, atol=1e-9)
    assert np.allclose((dp - dm) / (2 * h), -m * s * c, atol=1e-9)


@pytest.mark.parametrize("m", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("y,tau", [(0.3, 0.4), (1.1, -0.7), (2.5, 1.3)])
def test_complex_argument_against_mpmath(m, y, tau):
    got = shifted_jacobi(y, tau, m)
    z = mpmath.mpc(y, tau)
    want = [complex(mpmath.ellipfun(kind, z, m=m)) for kind in ("sn", "cn", "dn")]
    assert np.allclose(got, want, atol=1e-12)


def test_phase_powers():
    m, t, y = 0.5, 0.37, np.linspace(-3, 3, 40)
    s, c, d = jacobi(y, m)
    assert np.allclose(np.abs(phase_power_case1(y, m, t)), 1.0)
    near = np.abs(y) < 1.0
    assert np.allclose(phase_power_case1(y, m, t)[near], ((c + 1j * s) ** t)[near])
    assert np.allclose(phase_power_case3(y, m, t), (d + math.sqrt(m) * c) ** t)


@pytest.mark.parametrize("m", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_parameter_outside_unit_interval(m):
    with pytest.raises(DomainError):
        EllipticModulus(m)


def test_non_finite_argument():
    with pytest.raises(DomainError):
        eval_jacobi(float("inf"), 0.5)


def test_scalar_in_scalar_out():
    pt = eval_jacobi(0.3, 0.5)
    assert isinstance(pt.sn, float) and isinstance(pt.dn, float)
