"""Generalized associated Lame (GAL) potentials and their link to Heun's equation.

    V(y) = a(a+1) m sn^2 + b(b+1) m cn^2/dn^2 + f(f+1) dn^2/cn^2 + g(g+1)/sn^2

With psi = dn^-b cn^-f sn^-g phi, the Schrodinger equation -psi'' + V psi = E psi
becomes

    phi'' + 2[m b sn cn/dn + f sn dn/cn - g cn dn/sn] phi' - [R - Q m sn^2] phi = 0,
    R = -E + m(g+b)^2 + (f+g)^2,   Q = (b+f+g)(b+f+g-1) - a(a+1),

which is the y-chart Heun equation with gamma = 1/2 - g, delta = 1/2 - f,
eps = 1/2 - b, 4 alpha beta = Q and 4mq = R.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .elliptic import as_modulus, jacobi
from .errors import DomainError
from .heun import DEFAULT_EXCLUSION, HeunParams, _pole_guard, _relative, scalar

HALF = Fraction(1, 2)


def _is_number(v) -> bool:
    return isinstance(v, (int, float, Fraction, np.floating, np.integer))


@dataclass(frozen=True)
class GalParams:
    a: object
    b: object
    f: object
    g: object
    m: object

    def __post_init__(self):
        if _is_number(self.m) and not 0 < self.m < 1:
            raise DomainError(f"m must lie in (0, 1), got {self.m}")

    @property
    def bfg(self):
        return self.b + self.f + self.g

    def strengths(self) -> tuple:
        return (self.a, self.b, self.f, self.g)


@dataclass(frozen=True)
class SpectralPair:
    R: object
    Q: object
    E: object


def Q_of(p: GalParams):
    s = p.bfg
    return s * (s - 1) - p.a * (p.a + 1)


def R_of(p: GalParams, E):
    return -E + p.m * (p.g + p.b) ** 2 + (p.f + p.g) ** 2


def spectral_pair(p: GalParams, E) -> SpectralPair:
    return SpectralPair(R_of(p, E), Q_of(p), E)


def energy_of(p: GalParams, R):
    return -R + p.m * (p.g + p.b) ** 2 + (p.f + p.g) ** 2


# --- potential and residuals ---------------------------------------------------

def _guard(p: GalParams, y, exclusion):
    _pole_guard(
        y,
        float(p.m),
        exclusion,
        near_sn=float(p.g * (p.g + 1)) != 0,
        near_cn=float(p.f * (p.f + 1)) != 0,
    )


def potential(p: GalParams, y, exclusion: float = DEFAULT_EXCLUSION):
    _guard(p, y, exclusion)
    m = float(p.m)
    s, c, d = jacobi(y, m)
    a, b, f, g = (float(v) for v in p.strengths())
    return (
        a * (a + 1) * m * s * s
        + b * (b + 1) * m * c * c / (d * d)
        + f * (f + 1) * d * d / (c * c)
        + g * (g + 1) / (s * s)
    )


def _schrodinger_terms(p: GalParams, E, psi: Callable, y, exclusion):
    V = potential(p, y, exclusion)
    val, _, second = psi(y)
    return [-np.asarray(second, dtype=complex), V * val, -scalar(E) * val]


def schrodinger_residual(p: GalParams, E, psi: Callable, y, exclusion: float = DEFAULT_EXCLUSION):
    """-psi'' + (V - E) psi for ``psi: y -> (psi, psi', psi'')``."""
    return sum(_schrodinger_terms(p, E, psi, y, exclusion))


def relative_schrodinger_residual(p: GalParams, E, psi: Callable, y, exclusion: float = DEFAULT_EXCLUSION):
    return _relative(_schrodinger_terms(p, E, psi, y, exclusion))


def _phi_terms(p: GalParams, sp: SpectralPair, phi: Callable, y, exclusion):
    _guard(p, y, exclusion)
    m = float(p.m)
    s, c, d = jacobi(y, m)
    b, f, g = float(p.b), float(p.f), float(p.g)
    val, first, second = phi(y)
    coef = 2.0 * (m * b * s * c / d + f * s * d / c - g * c * d / s)
    return [
        np.asarray(second, dtype=complex),
        coef * first,
        -(scalar(sp.R) - scalar(sp.Q) * m * s * s) * val,
    ]


def phi_residual(p: GalParams, sp: SpectralPair, phi: Callable, y, exclusion: float = DEFAULT_EXCLUSION):
    return sum(_phi_terms(p, sp, phi, y, exclusion))


def relative_phi_residual(p: GalParams, sp: SpectralPair, phi: Callable, y, exclusion: float = DEFAULT_EXCLUSION):
    return _relative(_phi_terms(p, sp, phi, y, exclusion))


# --- Heun dictionary -----------------------------------------------------------

def heun_values(p: GalParams, R) -> dict:
    """(alpha, beta, gamma, delta, eps, 4mq) with plain arithmetic, usable on sympy input.

    alpha and beta are the two roots of x^2 - (1/2 - S)x + Q/4 with S = b+f+g;
    the discriminant is (a + 1/2)^2, giving the closed forms below.
    """
    gamma = HALF - p.g
    delta = HALF - p.f
    eps = HALF - p.b
    total = gamma + delta + eps
    return {
        "alpha": (p.a + total - HALF) / 2,
        "beta": (total - p.a - Fraction(3, 2)) / 2,
        "gamma": gamma,
        "delta": delta,
        "epsilon": eps,
        "fourmq": R,
    }


def heun_dictionary(p: GalParams, sp: SpectralPair) -> HeunParams:
    v = heun_values(p, sp.R)
    m = p.m
    c = 1 / m if isinstance(m, (int, Fraction)) else 1.0 / float(m)
    return HeunParams(
        alpha=v["alpha"],
        beta=v["beta"],
        gamma=v["gamma"],
        delta=v["delta"],
        epsilon=v["epsilon"],
        q=sp.R / (4 * m),
        c=c,
    )


# --- symmetries ---------------------------------------------------------------

SHIFTS = {"shift_K": "K", "shift_iK'": "iK'", "shift_K_iK'": "K+iK'"}
NEGATIONS = ("negate_a", "negate_b", "negate_f", "negate_g")
GENERATORS = tuple(SHIFTS) + NEGATIONS + ("t_reflection",)


@dataclass(frozen=True)
class SymmetryOp:
    """A word in the generators, applied left to right."""

    word: tuple[str, ...]

    def __post_init__(self):
        for k in self.word:
            if k not in GENERATORS:
                raise ValueError(f"unknown symmetry generator {k!r}")

    @classmethod
    def of(cls, *kinds: str) -> SymmetryOp:
        return cls(tuple(kinds))

    def then(self, other: SymmetryOp) -> SymmetryOp:
        return SymmetryOp(self.word + other.word)

    def __str__(self):
        return "*".join(self.word) or "id"


def _apply_one(kind: str, p: GalParams) -> GalParams:
    a, b, f, g = p.strengths()
    if kind == "shift_K":
        return replace(p, a=b, b=a, f=g, g=f)
    if kind == "shift_iK'":
        return replace(p, a=g, g=a, b=f, f=b)
    if kind == "shift_K_iK'":
        return replace(p, a=f, f=a, b=g, g=b)
    if kind in ("negate_a", "t_reflection"):
        return replace(p, a=-a - 1)
    if kind == "negate_b":
        return replace(p, b=-b - 1)
    if kind == "negate_f":
        return replace(p, f=-f - 1)
    if kind == "negate_g":
        return replace(p, g=-g - 1)
    raise ValueError(kind)


def apply_symmetry(op: SymmetryOp | str | Iterable[str], p: GalParams) -> GalParams:
    for kind in _word(op):
        p = _apply_one(kind, p)
    return p


def _word(op) -> tuple[str, ...]:
    if isinstance(op, SymmetryOp):
        return op.word
    if isinstance(op, str):
        return SymmetryOp.of(op).word
    return SymmetryOp(tuple(op)).word


def transport_R(op, p1: GalParams, R1):
    """R after the symmetry, holding E fixed.

    From R = -E + m(g+b)^2 + (f+g)^2:
      R2 = R1 - m(b1+g1)^2 - (f1+g1)^2 + m(b2+g2)^2 + (f2+g2)^2
    """
    p2 = apply_symmetry(op, p1)
    m = p1.m
    return R1 - m * (p1.b + p1.g) ** 2 - (p1.f + p1.g) ** 2 + m * (p2.b + p2.g) ** 2 + (p2.f + p2.g) ** 2


def shift_of(op) -> str | None:
    """Net translation (as a jring shift label) of a word, or None for the identity."""
    # the three quarter-period shifts plus the identity form a Klein four-group
    names = {(0, 0): None, (1, 0): "K", (0, 1): "iK'", (1, 1): "K+iK'"}
    acc = [0, 0]
    for kind in _word(op):
        if kind == "shift_K":
            acc[0] ^= 1
        elif kind == "shift_iK'":
            acc[1] ^= 1
        elif kind == "shift_K_iK'":
            acc[0] ^= 1
            acc[1] ^= 1
    return names[tuple(acc)]
