"""Heun's equation in the canonical x-chart and the elliptic y-chart.

Canonical form::

    G'' + (gamma/x + delta/(x-1) + eps/(x-c)) G' + (alpha beta x - q)/(x(x-1)(x-c)) G = 0

with gamma + delta + eps = alpha + beta + 1.  Under x = sn^2(y, m), m = 1/c,
F(y) = G(x) satisfies

    F'' + [(1-2eps) m sn cn/dn + (1-2delta) sn dn/cn + (2gamma-1) cn dn/sn] F'
        - [4mq - 4 alpha beta m sn^2] F = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import ellipkinc

from .elliptic import as_modulus, ellipk, jacobi
from .errors import BranchUnavailableError, DomainError, PoleProximityError

Triple = tuple[np.ndarray, np.ndarray, np.ndarray]

DEFAULT_EXCLUSION = 1e-3
CONSTRAINT_TOL = 1e-12


def _exact(v) -> bool:
    return isinstance(v, (int, Fraction))


def scalar(v):
    """float(v) when v is real, complex(v) otherwise."""
    z = complex(v)
    return z.real if z.imag == 0 else z


@dataclass(frozen=True)
class HeunParams:
    alpha: object
    beta: object
    gamma: object
    delta: object
    epsilon: object
    q: object
    c: object

    def __post_init__(self):
        if self.c in (0, 1):
            raise DomainError("singular point c must differ from 0 and 1")
        lhs = self.gamma + self.delta + self.epsilon
        rhs = self.alpha + self.beta + 1
        if all(_exact(v) for v in (self.alpha, self.beta, self.gamma, self.delta, self.epsilon)):
            if lhs != rhs:
                raise DomainError(f"gamma+delta+eps = {lhs} but alpha+beta+1 = {rhs}")
        elif abs(complex(lhs) - complex(rhs)) > CONSTRAINT_TOL * max(1.0, abs(complex(rhs))):
            raise DomainError(f"gamma+delta+eps = {lhs} but alpha+beta+1 = {rhs}")

    @property
    def m(self) -> float:
        return 1.0 / float(self.c)

    @property
    def fourmq(self):
        return 4.0 * scalar(self.q) / float(self.c)

    def as_floats(self) -> dict:
        return {f.name: scalar(getattr(self, f.name)) for f in fields(self)}

    def same_equation(self, other: HeunParams, tol: float = 1e-9) -> bool:
        """True when both describe the same ODE; alpha and beta enter only via sum and product."""
        pairs = [
            (self.gamma, other.gamma),
            (self.delta, other.delta),
            (self.epsilon, other.epsilon),
            (self.q, other.q),
            (self.c, other.c),
            (self.alpha + self.beta, other.alpha + other.beta),
            (self.alpha * self.beta, other.alpha * other.beta),
        ]
        return all(abs(complex(u) - complex(v)) <= tol * max(1.0, abs(complex(u))) for u, v in pairs)

    def key(self, digits: int = 12) -> tuple:
        out = []
        for f in fields(self):
            z = complex(getattr(self, f.name))
            out.append((round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0))
        return tuple(out)


@dataclass(frozen=True)
class CanonicalPoint:
    x: float
    G: complex
    dG: complex
    d2G: complex


def _relative(terms: list[np.ndarray]) -> np.ndarray:
    total = sum(terms)
    scale = np.max(np.abs(np.stack(terms)), axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.abs(total) / scale
    return np.where(scale == 0, 0.0, rel)


def _canonical_terms(p: HeunParams, sol: Callable, x, exclusion: float):
    x = np.asarray(x, dtype=float)
    c = float(p.c)
    for pole in (0.0, 1.0, c):
        if np.any(np.abs(x - pole) < exclusion):
            raise PoleProximityError(f"x within {exclusion} of the singular point {pole}")
    G, dG, d2G = sol(x)
    g, dl, e = float(p.gamma), float(p.delta), float(p.epsilon)
    ab, q = scalar(p.alpha) * scalar(p.beta), scalar(p.q)
    first = (g / x + dl / (x - 1.0) + e / (x - c)) * dG
    zeroth = (ab * x - q) / (x * (x - 1.0) * (x - c)) * G
    return [np.asarray(d2G, dtype=complex), first, zeroth]


def residual_canonical(p: HeunParams, sol: Callable, x, exclusion: float = DEFAULT_EXCLUSION):
    """Left side of the canonical equation for ``sol: x -> (G, G', G'')``."""
    return sum(_canonical_terms(p, sol, x, exclusion))


def relative_residual_canonical(p: HeunParams, sol: Callable, x, exclusion: float = DEFAULT_EXCLUSION):
    return _relative(_canonical_terms(p, sol, x, exclusion))


def _pole_guard(y, m: float, exclusion: float, near_sn: bool, near_cn: bool):
    K = ellipk(m)
    r = np.asarray(y, dtype=float) / K
    n = np.round(r)
    close = np.abs(r - n) * K < exclusion
    even = (n % 2) == 0
    if near_sn and np.any(close & even):
        raise PoleProximityError(f"y within {exclusion} of a zero of sn")
    if near_cn and np.any(close & ~even):
        raise PoleProximityError(f"y within {exclusion} of a zero of cn")


def _elliptic_terms(p: HeunParams, sol: Callable, y, m, exclusion: float):
    mod = as_modulus(m)
    if abs(float(p.c) * mod.m - 1.0) > 1e-12:
        raise DomainError("HeunParams.c must equal 1/m")
    g, dl, e = float(p.gamma), float(p.delta), float(p.epsilon)
    _pole_guard(y, mod.m, exclusion, near_sn=(2 * g - 1) != 0, near_cn=(1 - 2 * dl) != 0)
    s, c, d = jacobi(y, mod)
    F, dF, d2F = sol(y)
    coef = (1 - 2 * e) * mod.m * s * c / d + (1 - 2 * dl) * s * d / c + (2 * g - 1) * c * d / s
    fourmq = 4.0 * mod.m * scalar(p.q)
    fourab_m = 4.0 * scalar(p.alpha) * scalar(p.beta) * mod.m
    return [np.asarray(d2F, dtype=complex), coef * dF, -(fourmq - fourab_m * s * s) * F]


def residual_elliptic(p: HeunParams, sol: Callable, y, m, exclusion: float = DEFAULT_EXCLUSION):
    """Left side of the y-chart equation for ``sol: y -> (F, F', F'')``."""
    return sum(_elliptic_terms(p, sol, y, m, exclusion))


def relative_residual_elliptic(p: HeunParams, sol: Callable, y, m, exclusion: float = DEFAULT_EXCLUSION):
    return _relative(_elliptic_terms(p, sol, y, m, exclusion))


# --- chart change ------------------------------------------------------------

def to_canonical(y, m):
    """x = sn^2(y, m) on the invertible chart 0 < y < K."""
    mod = as_modulus(m)
    y = np.asarray(y, dtype=float)
    K = ellipk(mod)
    if np.any((y < 0) | (y > K)):
        raise DomainError("y must lie in [0, K] for the chart x = sn^2(y)")
    s, _, _ = jacobi(y, mod)
    x = np.asarray(s * s)
    return x if x.ndim else float(x)


def from_canonical(x, m):
    """Inverse chart: y = F(arcsin sqrt(x) | m) for 0 <= x <= 1."""
    mod = as_modulus(m)
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise DomainError("x must lie in [0, 1]")
    y = ellipkinc(np.arcsin(np.sqrt(x)), mod.m)
    return y if y.ndim else float(y)


def pullback_solution(F: Callable, m) -> Callable:
    """Turn ``F: y -> (F, F', F'')`` into ``G: x -> (G, G', G'')`` with G(x) = F(y(x))."""
    mod = as_modulus(m)

    def G(x):
        y = from_canonical(x, mod)
        s, c, d = jacobi(y, mod)
        f0, f1, f2 = F(y)
        xp = 2.0 * s * c * d
        xpp = 2.0 * (c * c * d * d - s * s * d * d - mod.m * s * s * c * c)
        g1 = f1 / xp
        g2 = (f2 - g1 * xpp) / (xp * xp)
        return f0, g1, g2

    return G


# --- Frobenius oracle at x = 0 -----------------------------------------------

def frobenius_series(p: HeunParams, n_terms: int) -> np.ndarray:
    """Coefficients c_0..c_{n-1} of the exponent-0 solution sum c_k x^k, c_0 = 1.

    Recurrence from multiplying by x(x-1)(x-c):
      c (k+1)(k+gamma) c_{k+1} = [(1+c) k(k-1) + (gamma(1+c) + delta c + eps) k + q] c_k
                                 - (k-1+alpha)(k-1+beta) c_{k-1}
    At a resonance k + gamma = 0 the series exists only if the right side
    vanishes there; the free coefficient is then set to zero.
    """
    g = scalar(p.gamma)
    if n_terms < 2:
        raise ValueError("n_terms must be at least 2")
    a, b, dl, e, q, c = (scalar(getattr(p, k)) for k in ("alpha", "beta", "delta", "epsilon", "q", "c"))
    out = np.zeros(n_terms, dtype=complex)
    out[0] = 1.0
    prev = 0.0
    for k in range(n_terms - 1):
        lead = (1 + c) * k * (k - 1) + (g * (1 + c) + dl * c + e) * k + q
        rhs = lead * out[k] - (k - 1 + a) * (k - 1 + b) * prev
        prev = out[k]
        if abs(k + g) < 1e-12:
            scale = abs(lead * out[k]) + abs((k - 1 + a) * (k - 1 + b) * out[k - 1] if k else 0) + 1.0
            if abs(rhs) > 1e-10 * scale:
                raise BranchUnavailableError(
                    f"gamma = {g.real:g}: the exponent-0 branch needs a logarithm (resonance at k = {k + 1})"
                )
            out[k + 1] = 0.0
            continue
        out[k + 1] = rhs / (c * (k + 1) * (k + g))
    return out


def second_branch_params(p: HeunParams) -> HeunParams:
    """Parameters of H in G = x^(1-gamma) H(x), the other local solution at 0."""
    g = p.gamma
    return HeunParams(
        alpha=p.alpha + 1 - g,
        beta=p.beta + 1 - g,
        gamma=2 - g,
        delta=p.delta,
        epsilon=p.epsilon,
        q=p.q + (1 - g) * (p.c * p.delta + p.epsilon),
        c=p.c,
    )


def series_value(coeffs: np.ndarray, x) -> np.ndarray:
    return np.polynomial.polynomial.polyval(x, coeffs)


@dataclass
class FrobeniusCheck:
    status: str  # "pass", "fail" or "skip"
    reason: str
    max_rel_error: float = math.nan
    value_at: float = 0.1


def frobenius_compare(
    p: HeunParams,
    G: Callable,
    x_check: float = 0.1,
    tol: float = 1e-8,
    n_terms: int = 60,
    fit_points: np.ndarray | None = None,
) -> FrobeniusCheck:
    """Compare a closed-form solution G(x) with the local Frobenius solutions at x = 0.

    The closed form may mix the exponent-0 and exponent-(1-gamma) branches, so
    the available series are combined with coefficients fitted on
    ``fit_points`` and the fit is then tested at ``x_check``.  For integer
    gamma one branch may need a logarithm; if the fit then fails, the result
    is a labelled skip, never a pass.
    """
    g = float(p.gamma)
    if fit_points is None:
        fit_points = np.linspace(0.02, 0.25, 9)
    pts = np.concatenate([fit_points, [x_check]])
    target = np.asarray(G(pts)[0], dtype=complex)
    cols, missing = [], []
    try:
        cols.append(series_value(frobenius_series(p, n_terms), pts))
    except BranchUnavailableError as exc:
        missing.append(str(exc))
    if abs(g - 1) > 1e-12:
        try:
            cols.append(pts ** (1 - g) * series_value(frobenius_series(second_branch_params(p), n_terms), pts))
        except BranchUnavailableError as exc:
            missing.append(f"exponent-(1-gamma) branch: {exc}")
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A[:-1], target[:-1], rcond=None)
    fitted = A @ coef
    err = np.abs(fitted - target) / np.max(np.abs(target))
    at_check = float(err[-1])
    worst = float(err.max())
    if worst <= tol:
        return FrobeniusCheck("pass", "series match", worst, x_check)
    if missing:
        reason = "; ".join(missing)
        return FrobeniusCheck("skip", f"{reason}; the closed form is not the available branch", worst, x_check)
    return FrobeniusCheck("fail", f"series mismatch at x={x_check}: {at_check:.3g}", worst, x_check)
