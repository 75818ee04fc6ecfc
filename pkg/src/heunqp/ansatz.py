"""Quasi-periodic solutions of the phi-equation for half-integral b, f or g.

The solution is a phase-type prefactor times a finite Jacobi polynomial,

    case 1 (b half-integral):  phi = [cn + i sn]^t          Z
    case 2 (f half-integral):  phi = [dn + i k sn]^t        Z,  k = sqrt(m)
    case 3 (g half-integral):  phi = [dn + k cn]^t          Z

with a = t - 1/2 and Z drawn from a finite span fixed by b+f+g = 2M+1/2 or
2M+3/2.  Substituting into the phi-equation and clearing sn*cn*dn gives a
homogeneous linear system in the coefficients that is affine in E; its
solutions are the energies and eigenfunctions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .closedform import ProductForm
from .elliptic import as_modulus, ellipk, jacobi, quarter_periods, shifted_jacobi
from .errors import DegeneracyNotGuaranteed, DomainError, NoClosedFormError, VerificationError
from .gal import GalParams, HALF, Q_of, heun_dictionary, relative_phi_residual, spectral_pair
from .heun import HeunParams
from .jring import JPoly, shift_images

NULL_TOL = 1e-9


class Case(enum.IntEnum):
    B_HALF = 1
    F_HALF = 2
    G_HALF = 3


class Parity(enum.Enum):
    HALF = "2M+1/2"
    THREE_HALF = "2M+3/2"


def _as_fraction(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v).limit_denominator(1000)


@dataclass(frozen=True)
class AnsatzSpec:
    case: Case
    half: Fraction
    N: int
    p: int
    t: float
    m: float

    def __post_init__(self):
        object.__setattr__(self, "case", Case(self.case))
        half = _as_fraction(self.half)
        if half.denominator != 2 or half < 0:
            raise DomainError(f"the half-integral strength must be a positive half-odd integer, got {half}")
        object.__setattr__(self, "half", half)
        if int(self.N) != self.N or self.N < 0:
            raise DomainError(f"N must be a non-negative integer, got {self.N}")
        if int(self.p) != self.p or not 0 <= self.p <= self.N:
            raise DomainError(f"need 0 <= p <= N, got p={self.p}, N={self.N}")
        if not math.isfinite(self.t):
            raise DomainError("t must be finite")
        object.__setattr__(self, "m", as_modulus(self.m).m)

    @property
    def gal(self) -> GalParams:
        N, p, h = self.N, self.p, self.half
        a = self.t - 0.5
        if self.case is Case.B_HALF:
            return GalParams(a=a, b=h, f=Fraction(N - p), g=Fraction(p), m=self.m)
        if self.case is Case.F_HALF:
            return GalParams(a=a, b=Fraction(N - p), f=h, g=Fraction(p), m=self.m)
        return GalParams(a=a, b=Fraction(p), f=Fraction(N - p), g=h, m=self.m)

    @property
    def bfg(self) -> Fraction:
        return self.half + self.N

    @property
    def parity(self) -> Parity:
        return Parity.HALF if (self.bfg - HALF) % 2 == 0 else Parity.THREE_HALF

    @property
    def M(self) -> int:
        if self.parity is Parity.HALF:
            return int((self.bfg - HALF) / 2)
        return int((self.bfg - Fraction(3, 2)) / 2)

    def with_t(self, t: float) -> AnsatzSpec:
        return AnsatzSpec(self.case, self.half, self.N, self.p, t, self.m)

    def label(self) -> str:
        name = {Case.B_HALF: "b", Case.F_HALF: "f", Case.G_HALF: "g"}[self.case]
        return f"case{int(self.case)}[{name}={self.half}] N={self.N} p={self.p} t={self.t:g} m={self.m:g}"


# --- ansatz pieces -------------------------------------------------------------

def _gens(m):
    return JPoly.sn(m), JPoly.cn(m), JPoly.dn(m)


def ansatz_basis(spec: AnsatzSpec) -> tuple[list[JPoly], list[str]]:
    """Basis of the Z-span, A-block first then B-block."""
    m = spec.m
    s, c, d = _gens(m)
    M = spec.M
    even = [s ** (2 * k) for k in range(M + 1)]
    if spec.parity is Parity.HALF:
        mixed = {Case.B_HALF: s * c, Case.F_HALF: s * d, Case.G_HALF: c * d}[spec.case]
        a_part = even
        b_part = [mixed * s ** (2 * k) for k in range(M)]
    else:
        lead, other = {
            Case.B_HALF: (c, s),
            Case.F_HALF: (d, s),
            Case.G_HALF: (c, d),
        }[spec.case]
        a_part = [lead * e for e in even]
        b_part = [other * e for e in even]
    names = [f"A{k}" for k in range(len(a_part))] + [f"B{k}" for k in range(len(b_part))]
    return a_part + b_part, names


def prefactor_log_derivative(spec: AnsatzSpec, t: float | None = None) -> JPoly:
    """u = P'/P for the case prefactor P (a ring element)."""
    t = spec.t if t is None else t
    m = spec.m
    s, c, d = _gens(m)
    k = math.sqrt(m)
    if spec.case is Case.B_HALF:
        return d * (1j * t)
    if spec.case is Case.F_HALF:
        return c * (1j * k * t)
    return s * (-k * t)


def prefactor_form(spec: AnsatzSpec, t: float | None = None) -> ProductForm:
    t = spec.t if t is None else t
    m = spec.m
    s, c, d = _gens(m)
    k = math.sqrt(m)
    if spec.case is Case.B_HALF:
        return ProductForm(m, [], am_power=t)
    if spec.case is Case.F_HALF:
        return ProductForm(m).times(d + s * (1j * k), t)
    return ProductForm(m).times(d + c * k, t)


@dataclass
class Pencil:
    spec: AnsatzSpec
    basis: list[JPoly]
    names: list[str]
    rows: list[tuple[int, int, int]]
    M0_full: np.ndarray  # rectangular, rows indexed by ``rows``
    M1_full: np.ndarray

    @cached_property
    def _projector(self) -> np.ndarray:
        q, _ = np.linalg.qr(self.M1_full)
        return q

    @property
    def M0(self) -> np.ndarray:
        """Square pencil part, projected on the range of M1."""
        return self._projector.conj().T @ self.M0_full

    @property
    def M1(self) -> np.ndarray:
        return self._projector.conj().T @ self.M1_full

    @property
    def shape(self) -> tuple[int, int]:
        n = len(self.basis)
        return n, n


def z_operator(spec: AnsatzSpec, t: float | None = None):
    """Coefficients (C2, C1, C0, C_E) of sn*cn*dn times the Z-equation.

    With phi = P Z, u = P'/P and W = 2[m b sn cn/dn + f sn dn/cn - g cn dn/sn]:
      Z'' + (2u + W) Z' + (u' + u^2 + W u - R + Q m sn^2) Z = 0,
    R = -E + R0,  R0 = m(g+b)^2 + (f+g)^2.
    """
    t = spec.t if t is None else t
    spec_t = spec if t == spec.t else spec.with_t(t)
    gal = spec_t.gal
    m = spec.m
    s, c, d = _gens(m)
    b, f, g = float(gal.b), float(gal.f), float(gal.g)
    Q = float(Q_of(gal))
    R0 = m * (g + b) ** 2 + (f + g) ** 2
    u = prefactor_log_derivative(spec_t)
    scd = s * c * d
    w_scd = (s * s * c * c) * (2 * m * b) + (s * s * d * d) * (2 * f) - (c * c * d * d) * (2 * g)
    c2 = scd
    c1 = u * scd * 2 + w_scd
    c0 = scd * (u.deriv() + u * u - R0 + (s * s) * (Q * m)) + w_scd * u
    return c2, c1, c0, scd


def apply_z_operator(spec: AnsatzSpec, Z: JPoly, E: float, t: float | None = None) -> JPoly:
    c2, c1, c0, ce = z_operator(spec, t)
    dZ = Z.deriv()
    return c2 * dZ.deriv() + c1 * dZ + c0 * Z + ce * Z * E


def build_pencil(spec: AnsatzSpec) -> Pencil:
    basis, names = ansatz_basis(spec)
    c2, c1, c0, ce = z_operator(spec)
    cols0, cols1 = [], []
    for Z in basis:
        dZ = Z.deriv()
        cols0.append(c2 * dZ.deriv() + c1 * dZ + c0 * Z)
        cols1.append(ce * Z)
    rows = sorted({k for col in cols0 + cols1 for k in col.terms})
    index = {k: i for i, k in enumerate(rows)}
    M0 = np.zeros((len(rows), len(basis)), dtype=complex)
    M1 = np.zeros_like(M0)
    for j, (a0, a1) in enumerate(zip(cols0, cols1)):
        for key, v in a0.terms.items():
            M0[index[key], j] = v
        for key, v in a1.terms.items():
            M1[index[key], j] = v
    if np.linalg.matrix_rank(M1) < len(basis):
        raise VerificationError(f"E-part of the pencil is rank deficient for {spec.label()}")
    return Pencil(spec, basis, names, rows, M0, M1)


@dataclass
class PencilSolution:
    E: complex | float
    coefficients: np.ndarray  # A block then B block
    names: list[str]
    conditioning: float  # relative null-vector residual of the full system
    multiplicity: int = 1

    @property
    def A(self) -> np.ndarray:
        return np.array([v for n, v in zip(self.names, self.coefficients) if n.startswith("A")])

    @property
    def B(self) -> np.ndarray:
        return np.array([v for n, v in zip(self.names, self.coefficients) if n.startswith("B")])

    @property
    def is_real(self) -> bool:
        return isinstance(self.E, float)


def _normalize(v: np.ndarray) -> np.ndarray:
    big = np.abs(v) > 1e-12 * np.max(np.abs(v))
    first = int(np.argmax(big))
    out = v / v[first]
    out[first] = 1.0
    return out


def _clean(E: complex) -> complex | float:
    if abs(E.imag) <= 1e-12 * max(1.0, abs(E)):
        return float(E.real)
    return complex(E)


def _refine(M0: np.ndarray, M1: np.ndarray, E: complex, v: np.ndarray, steps: int = 8):
    """Gauss-Newton on (M0 + E M1) v = 0 with the normalization w^H v = 1."""
    w = v / np.vdot(v, v)
    n = len(v)
    for _ in range(steps):
        A = M0 + E * M1
        J = np.zeros((A.shape[0] + 1, n + 1), dtype=complex)
        J[:-1, :n] = A
        J[:-1, n] = M1 @ v
        J[-1, :n] = w.conj()
        rhs = np.concatenate([-(A @ v), [1.0 - np.vdot(w, v)]])
        delta, *_ = np.linalg.lstsq(J, rhs, rcond=None)
        v = v + delta[:n]
        E = E + delta[n]
        if abs(delta[n]) <= 1e-15 * max(1.0, abs(E)):
            break
    return E, v


def solve_pencil(pencil: Pencil, tol: float = NULL_TOL) -> list[PencilSolution]:
    """All E for which the full (rectangular) system has a null vector.

    Candidates are the generalized eigenvalues of the square projection onto
    range(M1).  Each is polished by Gauss-Newton on the full system and kept
    only if that system is singular at E to relative accuracy ``tol``.
    Multiplicity is the dimension of the null space at E.
    """
    M0f, M1f = pencil.M0_full, pencil.M1_full
    cand = sla.eig(pencil.M0, -pencil.M1, right=False)
    scale0 = np.linalg.norm(M0f, 2)
    scale1 = np.linalg.norm(M1f, 2)
    found: list[PencilSolution] = []
    for E in cand:
        if not np.isfinite(E):
            continue
        _, sv, vh = np.linalg.svd(M0f + E * M1f)
        if sv[-1] / (scale0 + abs(E) * scale1) > 1e-4:
            continue
        E, v = _refine(M0f, M1f, complex(E), vh[-1].conj())
        _, sv, vh = np.linalg.svd(M0f + E * M1f)
        denom = scale0 + abs(E) * scale1
        rel = sv[-1] / denom
        if rel > tol:
            continue
        E = _clean(E)
        if any(abs(E - other.E) <= 1e-9 * max(1.0, abs(E)) for other in found):
            continue
        mult = int(np.sum(sv / denom <= tol))
        found.append(PencilSolution(E, _normalize(vh[-1].conj()), list(pencil.names), float(rel), mult))
    found.sort(key=lambda s: (complex(s.E).real, complex(s.E).imag))
    return found


# --- closed forms for E ----------------------------------------------------------

def energy_parts(case: Case, half, gal: GalParams, N, t):
    """(base, radicand) of the closed-form energy E = base +- sqrt(radicand).

    The radicand is None for strength 1/2.  Plain arithmetic only, so the
    inputs may be floats, Fractions or sympy expressions.
    """
    m, b, f, g = gal.m, gal.b, gal.f, gal.g
    if half == HALF:
        if case is Case.B_HALF:
            return t * t + m * (g + b) ** 2, None
        if case is Case.F_HALF:
            return m * t * t + (g + f) ** 2, None
        return (f + g) ** 2 + m * (g + b) ** 2, None
    if half == Fraction(3, 2):
        if case is Case.B_HALF:
            base = 1 + t * t + m * (g + b) ** 2 - m * (2 * g + 1)
            rad = (2 * g + 1) ** 2 * m * m + 4 * m * (N + 1) * (f - g) + 4 * (1 - m) * t * t
        elif case is Case.F_HALF:
            base = (1 + t * t) * m + (g + f) ** 2 - (2 * g + 1)
            rad = (2 * g + 1) ** 2 + 4 * m * (N + 1) * (b - g) - 4 * m * (1 - m) * t * t
        else:
            base = (f + g) ** 2 + m * (g + b) ** 2 - (1 + 2 * f + (2 * b + 1) * m)
            rad = (1 - m) * ((2 * f + 1) ** 2 - (2 * b + 1) ** 2 * m) + 4 * m * t * t
        return base, rad
    raise NoClosedFormError(f"no closed-form energy for half-integral strength {half}")


def eigenvalue_formula(spec: AnsatzSpec) -> list[float | complex]:
    """Closed-form energies, available for the half-integral strength 1/2 or 3/2.

    For strength 3/2 the two roots become a complex-conjugate pair when the
    radicand is negative.
    """
    gal = spec.gal
    gal = GalParams(float(gal.a), float(gal.b), float(gal.f), float(gal.g), spec.m)
    base, rad = energy_parts(spec.case, spec.half, gal, spec.N, spec.t)
    if rad is None:
        return [base]
    if rad < 0:
        r = math.sqrt(-rad)
        return [complex(base, -r), complex(base, r)]
    r = math.sqrt(rad)
    return [base - r, base + r]


# --- solutions -----------------------------------------------------------------

def standard_grid(m: float, n: int = 200, lo: float = 0.05, hi: float = 0.95) -> np.ndarray:
    K = ellipk(m)
    return np.linspace(lo * K, hi * K, n)


@dataclass
class ClosedFormSolution:
    spec: AnsatzSpec
    pencil: PencilSolution
    Z: JPoly
    form: ProductForm

    @property
    def E(self) -> float:
        return self.pencil.E

    @property
    def gal(self) -> GalParams:
        return self.spec.gal

    @property
    def spectral(self):
        return spectral_pair(self.gal, self.E)

    @property
    def heun(self) -> HeunParams:
        return heun_dictionary(self.gal, self.spectral)

    def __call__(self, y):
        return self.form.evaluate(y)

    def max_residual(self, y=None) -> float:
        y = standard_grid(self.spec.m) if y is None else y
        return float(np.max(relative_phi_residual(self.gal, self.spectral, self.form.evaluate, y)))


def _build_solution(spec: AnsatzSpec, ps: PencilSolution, basis: list[JPoly]) -> ClosedFormSolution:
    Z = JPoly(m=spec.m)
    for coef, fn in zip(ps.coefficients, basis):
        Z = Z + fn * complex(coef)
    form = prefactor_form(spec).times(Z, 1)
    return ClosedFormSolution(spec, ps, Z, form)


def construct(spec: AnsatzSpec) -> list[ClosedFormSolution]:
    pencil = build_pencil(spec)
    return [_build_solution(spec, ps, pencil.basis) for ps in solve_pencil(pencil)]


def evaluate_solution(sol: ClosedFormSolution, y):
    return sol.form.evaluate(y)


def _is_integer(t: float) -> bool:
    return abs(t - round(t)) < 1e-12


def degenerate_partner(sol: ClosedFormSolution, allow_integer: bool = False) -> ClosedFormSolution:
    """The second member of the degenerate pair: same E, t -> -t.

    The phi-equation depends on t only through a(a+1) = t^2 - 1/4, so the
    ansatz built at -t solves the same equation; the energy is even in t.
    """
    if _is_integer(sol.spec.t) and not allow_integer:
        raise DegeneracyNotGuaranteed(f"t = {sol.spec.t} is an integer; the pair may coincide or be non-degenerate")
    spec2 = sol.spec.with_t(-sol.spec.t)
    pencil = build_pencil(spec2)
    options = solve_pencil(pencil)
    if not options:
        raise VerificationError(f"no partner solution at t -> -t for {sol.spec.label()}")
    best = min(options, key=lambda ps: abs(ps.E - sol.E))
    if abs(best.E - sol.E) > 1e-8 * max(1.0, abs(sol.E)):
        raise VerificationError(
            f"partner energy {best.E} differs from {sol.E} for {sol.spec.label()}"
        )
    return _build_solution(spec2, best, pencil.basis)


def wronskian(f1, f2, y) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise Wronskian f1 f2' - f2 f1' and its size relative to |f1 f2'| + |f2 f1'|."""
    a0, a1, _ = f1(y)
    b0, b1, _ = f2(y)
    w = a0 * b1 - b0 * a1
    scale = np.abs(a0 * b1) + np.abs(b0 * a1)
    return w, np.abs(w) / scale


@dataclass
class DegeneracyCheck:
    relative: float  # peak of |W| / (|f1 f2'| + |f2 f1'|) over the grid
    abel_deviation: float  # spread of the Schrodinger-frame Wronskian, which must be constant
    same_heun: bool

    def passed(self, rel_tol: float = 1e-6, abel_tol: float = 1e-7) -> bool:
        return self.same_heun and self.relative >= rel_tol and self.abel_deviation <= abel_tol


def degeneracy_check(sol: ClosedFormSolution, partner: ClosedFormSolution, y=None) -> DegeneracyCheck:
    """Linear independence of a degenerate pair.

    In the phi frame W = C dn^2b cn^2f sn^2g, so a pointwise ratio is
    meaningless near the zeros of cn and sn.  Dividing out that factor gives
    the Wronskian of the two Schrodinger functions psi, which is constant;
    constancy plus a non-negligible peak ratio certifies independence.
    """
    y = standard_grid(sol.spec.m) if y is None else y
    w, rel = wronskian(sol.form.evaluate, partner.form.evaluate, y)
    gal = sol.gal
    s, c, d = jacobi(y, sol.spec.m)
    b, f, g = float(gal.b), float(gal.f), float(gal.g)
    abel = w / (d ** (2 * b) * c ** (2 * f) * s ** (2 * g))
    ref = complex(np.median(abel.real) + 1j * np.median(abel.imag))
    dev = float(np.max(np.abs(abel - ref)) / abs(ref)) if ref else math.inf
    same = sol.heun.same_equation(partner.heun)
    return DegeneracyCheck(float(np.max(rel)), dev, same)


# --- quasi-periodicity -------------------------------------------------------------

PERIOD_OF_CASE = {Case.B_HALF: "2K", Case.F_HALF: "2K+2iK'", Case.G_HALF: "2iK'"}


@dataclass
class QuasiPeriodicity:
    mu: complex
    period: str
    deviation: float  # max |ratio(y) - mu| over the grid
    sigma: int  # sign coming from the polynomial part
    predicted: complex = field(default=0j)

    def passed(self, tol: float = 1e-9) -> bool:
        return self.deviation <= tol and abs(self.mu - self.predicted) <= tol


# winding of the prefactor base along the period: +pi for cases 1 and 2, -pi along
# the straight complex path from y0 = K/2 for case 3
_WINDING = {Case.B_HALF: 1, Case.F_HALF: 1, Case.G_HALF: -1}


def _z_sign(sol: ClosedFormSolution, period: str, y) -> tuple[int, float]:
    poly, exps = sol.Z.substitute(shift_images(period, sol.spec.m))
    s, c, d = jacobi(y, sol.spec.m)
    ratio = poly(s, c, d) * s ** exps[0] * c ** exps[1] * d ** exps[2] / sol.Z(s, c, d)
    sigma = int(round(float(np.median(ratio.real))))
    return sigma, float(np.max(np.abs(ratio - sigma)))


def _continued_phase_jump(sol: ClosedFormSolution, period: str, y0: float, samples: int = 4000) -> float:
    """Change of arg(base) along the straight path y0 -> y0 + period."""
    qp = quarter_periods(sol.spec.m)
    dre, dim = {"2K": (2 * qp.K, 0.0), "2K+2iK'": (2 * qp.K, 2 * qp.Kprime), "2iK'": (0.0, 2 * qp.Kprime)}[period]
    lam = np.linspace(0.0, 1.0, samples)
    s, c, d = shifted_jacobi(y0 + lam * dre, lam * dim, sol.spec.m)
    k = math.sqrt(sol.spec.m)
    base = {
        Case.B_HALF: c + 1j * s,
        Case.F_HALF: d + 1j * k * s,
        Case.G_HALF: d + k * c,
    }[sol.spec.case]
    phase = np.unwrap(np.angle(base))
    if np.max(np.abs(np.diff(phase))) > 0.5:
        raise VerificationError("path continuation too coarse for the prefactor phase")
    return float(phase[-1] - phase[0])


def quasi_periodicity_factor(sol: ClosedFormSolution, y=None, tol: float = 1e-9) -> QuasiPeriodicity:
    """Multiplier mu with phi(y + period) = mu phi(y).

    Case 1 uses the real period 2K and evaluates phi directly.  The case 2
    and case 3 prefactors are not quasi-periodic along the real axis; there
    the period is 2K+2iK' resp. 2iK', the polynomial part is shifted exactly
    through the half-period sign table and the prefactor phase is continued
    numerically along the straight path.
    """
    spec = sol.spec
    K = ellipk(spec.m)
    period = PERIOD_OF_CASE[spec.case]
    if y is None:
        y = np.linspace(0.05 * K, 1.95 * K, 200)
        y = y[np.abs(y - K) > 0.02 * K]
    sigma, _ = _z_sign(sol, period, y)
    if spec.case is Case.B_HALF:
        ratio = sol.form.value(y + 2 * K) / sol.form.value(y)
    else:
        # the prefactor base has complex zeros, so the multiplier is a
        # monodromy: fix the homotopy class by continuing from y0 = K/2
        jump = _continued_phase_jump(sol, period, K / 2)
        poly, exps = sol.Z.substitute(shift_images(period, spec.m))
        s, c, d = jacobi(y, spec.m)
        zr = poly(s, c, d) * s ** exps[0] * c ** exps[1] * d ** exps[2] / sol.Z(s, c, d)
        ratio = zr * np.exp(1j * spec.t * jump)
    mu = complex(np.median(ratio.real) + 1j * np.median(ratio.imag))
    dev = float(np.max(np.abs(ratio - mu)))
    predicted = sigma * np.exp(1j * _WINDING[spec.case] * math.pi * spec.t)
    return QuasiPeriodicity(mu, period, dev, sigma, complex(predicted))


def verify_solution(sol: ClosedFormSolution, tol: float = 1e-9) -> float:
    r = sol.max_residual()
    if r > tol:
        raise VerificationError(f"phi residual {r:.3g} > {tol} for {sol.spec.label()}")
    return r
