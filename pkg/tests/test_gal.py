from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heunqp.ansatz import AnsatzSpec, construct
from heunqp.elliptic import jacobi, quarter_periods, shifted_jacobi
from heunqp.errors import DomainError
from heunqp.gal import (
    GENERATORS,
    GalParams,
    Q_of,
    R_of,
    SymmetryOp,
    apply_symmetry,
    energy_of,
    heun_dictionary,
    potential,
    relative_schrodinger_residual,
    shift_of,
    spectral_pair,
    transport_R,
)

strength = st.floats(-3, 3)
params = st.builds(GalParams, strength, strength, strength, strength, st.floats(0.05, 0.95))
words = st.lists(st.sampled_from(GENERATORS), max_size=6)


def V_of(p, s, c, d):
    a, b, f, g = p.strengths()
    m = p.m
    return a * (a + 1) * m * s * s + b * (b + 1) * m * c * c / (d * d) + f * (f + 1) * d * d / (c * c) + g * (g + 1) / (s * s)


@pytest.mark.parametrize("op,shift", [("shift_K", (1, 0)), ("shift_iK'", (0, 1)), ("shift_K_iK'", (1, 1))])
def test_translation_permutes_strengths(op, shift):
    p = GalParams(0.3, 1.7, -0.4, 2.2, 0.55)
    qp = quarter_periods(p.m)
    y = np.linspace(0.2, 1.5, 17)
    moved = shifted_jacobi(y + shift[0] * qp.K, np.full_like(y, shift[1] * qp.Kprime), p.m)
    assert np.allclose(V_of(p, *moved), V_of(apply_symmetry(op, p), *jacobi(y, p.m)), rtol=1e-9)


@given(params, st.sampled_from(["negate_a", "negate_b", "negate_f", "negate_g", "t_reflection"]))
def test_negations_leave_the_potential_unchanged(p, op):
    y = np.linspace(0.2, 1.4, 9)
    assert np.allclose(potential(p, y), potential(apply_symmetry(op, p), y), rtol=1e-12, atol=1e-9)


@given(params, words)
def test_words_preserve_the_strength_invariant(p, word):
    q = apply_symmetry(word, p)
    inv = sorted(x * (x + 1) for x in p.strengths())
    assert np.allclose(sorted(x * (x + 1) for x in q.strengths()), inv, atol=1e-9)


@given(params, words, st.floats(-5, 5))
def test_transport_holds_energy_fixed(p, word, E):
    R2 = transport_R(word, p, R_of(p, E))
    assert np.isclose(energy_of(apply_symmetry(word, p), R2), E, atol=1e-9)


def test_translations_form_a_klein_group():
    assert shift_of(("shift_K", "shift_iK'")) == "K+iK'"
    assert shift_of(("shift_K", "shift_K")) is None
    for s in ("shift_K", "shift_iK'", "shift_K_iK'"):
        p = GalParams(0.3, 1.7, -0.4, 2.2, 0.5)
        assert apply_symmetry((s, s), p) == p


@given(params, st.floats(-5, 5))
def test_dictionary_satisfies_the_constraint(p, E):
    h = heun_dictionary(p, spectral_pair(p, E))
    assert np.isclose(h.gamma + h.delta + h.epsilon, h.alpha + h.beta + 1)
    assert np.isclose(4 * h.alpha * h.beta, Q_of(p), atol=1e-9)
    assert np.isclose(4 * p.m * h.q, R_of(p, E))


def test_exact_inputs_stay_exact():
    p = GalParams(Fraction(1, 2), Fraction(3, 2), Fraction(0), Fraction(1), Fraction(1, 2))
    h = heun_dictionary(p, spectral_pair(p, Fraction(1, 3)))
    assert isinstance(h.gamma, Fraction) and h.c == 2


def test_unknown_generator():
    with pytest.raises(ValueError):
        SymmetryOp.of("rotate")


def test_modulus_gate():
    with pytest.raises(DomainError):
        GalParams(0, 0, 0, 0, 1.2)


def test_schrodinger_residual_of_a_constructed_solution():
    sol = construct(AnsatzSpec(1, Fraction(3, 2), 2, 1, 0.37, 0.5))[0]
    gal = sol.gal
    b, f, g = float(gal.b), float(gal.f), float(gal.g)
    psi = sol.form.times_monomial(-g, -f, -b)
    y = np.linspace(0.1, 0.9, 40) * quarter_periods(0.5).K
    assert np.max(relative_schrodinger_residual(gal, sol.E, psi.evaluate, y)) < 1e-10
    assert np.max(relative_schrodinger_residual(gal, sol.E + 1e-3, psi.evaluate, y)) > 1e-5
