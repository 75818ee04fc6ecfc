import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heunqp.ansatz import (
    AnsatzSpec,
    Case,
    construct,
    degeneracy_check,
    degenerate_partner,
    eigenvalue_formula,
    quasi_periodicity_factor,
    standard_grid,
)
from heunqp.closedform import ProductForm
from heunqp.elliptic import ellipk
from heunqp.errors import DegeneracyNotGuaranteed, DomainError, NoClosedFormError
from heunqp.gal import relative_phi_residual
from heunqp.jring import JPoly

HALF, THREE_HALF = Fraction(1, 2), Fraction(3, 2)


def ratio_spread(f, g, y):
    r = f.value(y) / g.value(y)
    return float(np.max(np.abs(r - r[0])) / abs(r[0]))


# N = 0 energies quoted in closed form
@pytest.mark.parametrize("t", [0.25, 0.37, 0.81])
@pytest.mark.parametrize("m", [0.36, 0.5, 0.75])
@pytest.mark.parametrize("case,expected", [
    (Case.B_HALF, lambda t, m: (4 * t * t + m) / 4),
    (Case.F_HALF, lambda t, m: (4 * m * t * t + 1) / 4),
    (Case.G_HALF, lambda t, m: (1 + m) / 4),
])
def test_ground_energies(case, expected, t, m):
    sols = construct(AnsatzSpec(case, HALF, 0, 0, t, m))
    assert len(sols) == 1
    assert abs(sols[0].E - expected(t, m)) < 1e-12


@settings(max_examples=40)
@given(st.sampled_from(list(Case)), st.sampled_from([HALF, THREE_HALF]), st.integers(0, 3),
       st.data(), st.floats(0.05, 1.9), st.floats(0.05, 0.95))
def test_pencil_matches_formula(case, half, N, data, t, m):
    p = data.draw(st.integers(0, N))
    spec = AnsatzSpec(case, half, N, p, t, m)
    pencil = sorted((complex(s.E) for s in construct(spec)), key=lambda z: (z.real, z.imag))
    formula = sorted((complex(E) for E in eigenvalue_formula(spec)), key=lambda z: (z.real, z.imag))
    assert len(pencil) == len(formula)
    assert all(abs(a - b) <= 1e-9 * max(1, abs(b)) for a, b in zip(pencil, formula))


def test_two_branch_energies_can_be_complex():
    spec = AnsatzSpec(Case.B_HALF, THREE_HALF, 1, 1, 0.37, 0.75)
    Es = eigenvalue_formula(spec)
    assert all(isinstance(E, complex) for E in Es) and Es[0] == Es[1].conjugate()
    for sol in construct(spec):
        assert sol.max_residual() < 1e-10


def test_first_excited_case1_eigenfunction_with_f_one():
    # b = 1/2, f = 1, g = 0: phi = (cn + i sn)^t (t cn - i sn), so B/A = -i/t
    t, m = 0.37, 0.5
    (sol,) = construct(AnsatzSpec(Case.B_HALF, HALF, 1, 0, t, m))
    A, B = sol.pencil.A[0], sol.pencil.B[0]
    assert abs(B / A - (-1j / t)) < 1e-12
    s, c = JPoly.sn(m), JPoly.cn(m)
    closed = ProductForm(m).times(c + s * 1j, t).times(c * t - s * 1j)
    assert ratio_spread(sol.form, closed, standard_grid(m, 50)) < 1e-12


def test_first_excited_case1_eigenfunction_with_g_one():
    t, m = 0.37, 0.5
    (sol,) = construct(AnsatzSpec(Case.B_HALF, HALF, 1, 1, t, m))
    assert abs(sol.pencil.B[0] / sol.pencil.A[0] - (-1j * t)) < 1e-12


def test_cn_plus_i_t_sn_is_not_a_solution():
    t, m = 0.37, 0.5
    (sol,) = construct(AnsatzSpec(Case.B_HALF, HALF, 1, 0, t, m))
    s, c = JPoly.sn(m), JPoly.cn(m)
    wrong = ProductForm(m).times(c + s * 1j, t).times(c + s * (1j * t))
    y = standard_grid(m)
    assert np.max(relative_phi_residual(sol.gal, sol.spectral, wrong.evaluate, y)) > 1e-2


@pytest.mark.parametrize("case", list(Case))
@pytest.mark.parametrize("half", [HALF, THREE_HALF])
def test_degenerate_partner(case, half):
    for sol in construct(AnsatzSpec(case, half, 2, 1, 0.37, 0.36)):
        partner = degenerate_partner(sol)
        assert partner.max_residual() < 1e-9
        dc = degeneracy_check(sol, partner)
        assert dc.passed(), dc


def test_integer_t_refuses_the_partner():
    (sol,) = construct(AnsatzSpec(Case.B_HALF, HALF, 0, 0, 1.0, 0.5))
    with pytest.raises(DegeneracyNotGuaranteed):
        degenerate_partner(sol)


def test_case1_multiplier_by_direct_evaluation():
    t, m = 0.37, 0.5
    for sol in construct(AnsatzSpec(Case.B_HALF, THREE_HALF, 2, 0, t, m)):
        K = ellipk(m)
        y = np.linspace(0.1, 1.9, 31) * K
        r = sol.form.value(y + 2 * K) / sol.form.value(y)
        qp = quasi_periodicity_factor(sol)
        assert np.allclose(r, qp.mu, atol=1e-10)
        assert abs(abs(qp.mu) - 1) < 1e-12
        assert qp.passed()


@pytest.mark.parametrize("case", list(Case))
@pytest.mark.parametrize("t", [0.37, 0.81, 1.0, 2.0])
def test_multiplier_matches_prediction(case, t):
    for half in (HALF, THREE_HALF):
        for sol in construct(AnsatzSpec(case, half, 1, 0, t, 0.6)):
            qp = quasi_periodicity_factor(sol)
            assert qp.passed(), qp
            if float(t).is_integer():
                assert min(abs(qp.mu - 1), abs(qp.mu + 1)) < 1e-9
            else:
                assert min(abs(qp.mu - s * cmath.exp(1j * math.pi * t)) for s in (1, -1)) < 1e-9 or \
                    min(abs(qp.mu - s * cmath.exp(-1j * math.pi * t)) for s in (1, -1)) < 1e-9


def test_strength_beyond_three_halves_has_no_formula_but_still_solves():
    spec = AnsatzSpec(Case.B_HALF, Fraction(5, 2), 1, 0, 0.37, 0.5)
    with pytest.raises(NoClosedFormError):
        eigenvalue_formula(spec)
    sols = construct(spec)
    assert sols and all(s.max_residual() < 1e-9 for s in sols)


@pytest.mark.parametrize("kwargs", [
    dict(N=1, p=3), dict(N=-1, p=0), dict(half=Fraction(1, 3)), dict(t=float("inf")), dict(m=1.0),
])
def test_spec_gates(kwargs):
    base = dict(case=1, half=HALF, N=1, p=0, t=0.37, m=0.5)
    base.update(kwargs)
    with pytest.raises(DomainError):
        AnsatzSpec(**base)
