"""Verification paths that share no code with the constructors.

* ``integrate``: adaptive DOP853 (scipy) on the y-chart Heun equation or the
  phi-equation, with Jacobi functions from ``scipy.special.ellipj``.
* ``discrete_spectrum``: plane-wave Bloch diagonalization of -d^2/dy^2 + V on
  one period 2K for the nonsingular subfamily f = g = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import ellipj, ellipk

from .errors import DomainError, VerificationError
from .gal import GalParams
from .heun import HeunParams, scalar

DEFAULT_TOL = 1e-12
DEFAULT_MARGIN = 0.02  # arcs stop this fraction of K short of a coefficient pole


class IntegrationError(VerificationError):
    pass


class ResolutionError(VerificationError):
    pass


@dataclass(frozen=True)
class IvpSpec:
    equation: str  # "elliptic_heun" or "phi_equation"
    params: object  # HeunParams, or (GalParams, R, Q) for the phi-equation
    m: float
    y0: float
    initial: tuple[complex, complex]
    span: tuple[float, float]
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.equation not in ("elliptic_heun", "phi_equation"):
            raise DomainError(f"unknown equation {self.equation!r}")
        if not 0 < self.m < 1:
            raise DomainError(f"m must lie in (0, 1), got {self.m}")
        if self.tol <= 0:
            raise DomainError("tol must be positive")


@dataclass
class Trajectory:
    y: np.ndarray
    value: np.ndarray
    derivative: np.ndarray
    nfev: int


def _coefficients(spec: IvpSpec) -> tuple[Callable, bool, bool]:
    """(y -> (P, Qc)) for F'' + P F' + Qc F = 0, plus which of sn, cn zeros are poles."""
    m = spec.m
    if spec.equation == "elliptic_heun":
        h: HeunParams = spec.params
        g, dl, e = scalar(h.gamma), scalar(h.delta), scalar(h.epsilon)
        fourmq = 4.0 * m * scalar(h.q)
        fourab = 4.0 * scalar(h.alpha) * scalar(h.beta)

        def coef(y):
            s, c, d, _ = ellipj(y, m)
            P = (1 - 2 * e) * m * s * c / d + (1 - 2 * dl) * s * d / c + (2 * g - 1) * c * d / s
            return P, -(fourmq - fourab * m * s * s)

        return coef, (2 * g - 1) != 0, (1 - 2 * dl) != 0
    gal, R, Q = spec.params
    b, f, g = float(gal.b), float(gal.f), float(gal.g)
    R, Q = scalar(R), scalar(Q)

    def coef(y):
        s, c, d, _ = ellipj(y, m)
        P = 2.0 * (m * b * s * c / d + f * s * d / c - g * c * d / s)
        return P, -(R - Q * m * s * s)

    return coef, g != 0, f != 0


def pole_points(span: tuple[float, float], m: float, near_sn: bool, near_cn: bool) -> list[float]:
    """Zeros of sn (even multiples of K) and cn (odd multiples) inside the span."""
    K = float(ellipk(m))
    lo, hi = sorted(span)
    out = []
    for n in range(int(np.floor(lo / K)) - 1, int(np.ceil(hi / K)) + 2):
        if (n % 2 == 0 and near_sn) or (n % 2 == 1 and near_cn):
            if lo <= n * K <= hi:
                out.append(n * K)
    return out


def integrate(spec: IvpSpec, samples: np.ndarray | None = None) -> Trajectory:
    """Integrate from y0 across ``span``; the span must avoid coefficient poles."""
    coef, near_sn, near_cn = _coefficients(spec)
    K = float(ellipk(spec.m))
    lo, hi = sorted(spec.span)
    if not lo <= spec.y0 <= hi:
        raise DomainError("y0 must lie in the span")
    for pole in pole_points((lo - 1e-3 * K, hi + 1e-3 * K), spec.m, near_sn, near_cn):
        raise DomainError(f"span {spec.span} reaches the coefficient pole at y = {pole:.6g}")

    def rhs(y, u):
        P, Qc = coef(y)
        return np.array([u[1], -P * u[1] - Qc * u[0]])

    u0 = np.array(spec.initial, dtype=complex)
    pieces = []
    nfev = 0
    for end in (lo, hi):
        if end == spec.y0:
            continue
        pts = None
        if samples is not None:
            sel = samples[(samples - spec.y0) * (end - spec.y0) >= 0]
            pts = np.sort(sel)[::-1] if end < spec.y0 else np.sort(sel)
        sol = solve_ivp(rhs, (spec.y0, end), u0, method="DOP853", rtol=spec.tol, atol=spec.tol * max(1.0, np.abs(u0).max()), t_eval=pts)
        if sol.status != 0:
            where = sol.t[-1] if sol.t.size else spec.y0
            raise IntegrationError(f"integration stopped near y = {where:.6g}: {sol.message}")
        nfev += sol.nfev
        pieces.append((sol.t, sol.y))
    if not pieces:
        return Trajectory(np.array([spec.y0]), u0[:1], u0[1:], 0)
    ys = np.concatenate([p[0] for p in pieces])
    us = np.concatenate([p[1] for p in pieces], axis=1)
    order = np.argsort(ys, kind="stable")
    ys, us = ys[order], us[:, order]
    keep = np.concatenate([[True], np.diff(ys) > 0])
    return Trajectory(ys[keep], us[0, keep], us[1, keep], nfev)


# --- closed-form cross-check ---------------------------------------------------

@dataclass
class OracleResult:
    max_deviation: float  # relative to max |closed form| over the arc
    arcs: list[tuple[float, float]]
    nfev: int

    def passed(self, tol: float = 1e-7) -> bool:
        return self.max_deviation <= tol


def arcs_between_poles(span, m: float, near_sn: bool, near_cn: bool, margin: float = DEFAULT_MARGIN):
    K = float(ellipk(m))
    lo, hi = sorted(span)
    cuts = pole_points((lo, hi), m, near_sn, near_cn)
    bounds = [lo]
    for c in cuts:
        bounds += [c - margin * K, c + margin * K]
    bounds.append(hi)
    return [(a, b) for a, b in zip(bounds[::2], bounds[1::2]) if b - a > margin * K]


def check_closed_form(
    equation: str,
    params,
    m: float,
    closed: Callable,
    span: tuple[float, float],
    tol: float = DEFAULT_TOL,
    n_samples: int = 60,
    margin: float = DEFAULT_MARGIN,
) -> OracleResult:
    """Seed the integrator from a closed form at each arc midpoint and compare over the arc.

    ``closed`` maps y to (F, F', F'').  Arcs are separated at coefficient poles
    and each arc gets a fresh seed.
    """
    probe = IvpSpec(equation, params, m, span[0], (0j, 0j), span, tol)
    _, near_sn, near_cn = _coefficients(probe)
    worst, nfev = 0.0, 0
    arcs = arcs_between_poles(span, m, near_sn, near_cn, margin)
    for a, b in arcs:
        y0 = 0.5 * (a + b)
        f0, f1, _ = closed(np.array([y0]))
        spec = IvpSpec(equation, params, m, y0, (complex(f0[0]), complex(f1[0])), (a, b), tol)
        ys = np.linspace(a, b, n_samples)
        tr = integrate(spec, samples=ys)
        ref = closed(tr.y)[0]
        dev = np.max(np.abs(tr.value - ref)) / np.max(np.abs(ref))
        worst = max(worst, float(dev))
        nfev += tr.nfev
    return OracleResult(worst, arcs, nfev)


def end_deviation(equation: str, params, m: float, closed: Callable, y0: float, y1: float, tol: float = DEFAULT_TOL) -> float:
    """Relative deviation at y1 of a trajectory seeded from ``closed`` at y0 (sensitivity runs)."""
    f0, f1, _ = closed(np.array([y0]))
    lo, hi = sorted((y0, y1))
    spec = IvpSpec(equation, params, m, y0, (complex(f0[0]), complex(f1[0])), (lo, hi), tol)
    tr = integrate(spec, samples=np.array([y0, y1]))
    ref = closed(np.array([y1]))[0][0]
    val = tr.value[np.argmin(np.abs(tr.y - y1))]
    return float(abs(val - ref) / abs(ref))


# --- Bloch eigensolver -----------------------------------------------------------

def gal_potential_samples(p: GalParams, y: np.ndarray) -> np.ndarray:
    m = float(p.m)
    s, c, d, _ = ellipj(y, m)
    a, b = float(p.a), float(p.b)
    return a * (a + 1) * m * s * s + b * (b + 1) * m * c * c / (d * d)


def _bloch_matrix(p: GalParams, bloch_phase: float, n_waves: int, n_grid: int) -> np.ndarray:
    m = float(p.m)
    L = 2.0 * float(ellipk(m))
    y = np.arange(n_grid) * (L / n_grid)
    Vhat = np.fft.fft(gal_potential_samples(p, y)) / n_grid
    half = n_waves // 2
    ns = np.arange(-half, n_waves - half)
    kin = ((bloch_phase + 2.0 * np.pi * ns) / L) ** 2
    diff = (ns[:, None] - ns[None, :]) % n_grid
    H = Vhat[diff]
    H[np.diag_indices(n_waves)] += kin
    return H


def discrete_spectrum(
    p: GalParams,
    bloch_phase: float,
    basis_size: int = 64,
    n_levels: int = 8,
    cauchy_tol: float = 1e-8,
) -> np.ndarray:
    """Lowest eigenvalues of -d^2/dy^2 + V with psi(y + 2K) = exp(i bloch_phase) psi(y).

    Plane waves exp(i (bloch_phase + 2 pi n) y / 2K), n over ``basis_size``
    consecutive integers, and the Fourier coefficients of V from an FFT.  The
    result is accepted only when it agrees with a basis of twice the size to
    ``cauchy_tol``.
    """
    if float(p.f) != 0 or float(p.g) != 0:
        raise DomainError("the Bloch eigensolver needs f = g = 0 (potential regular on the real line)")
    if basis_size < 64:
        raise DomainError("basis_size must be at least 64")
    n_grid = 8 * basis_size
    ev = np.linalg.eigvalsh(_bloch_matrix(p, bloch_phase, basis_size, n_grid))[:n_levels]
    ev2 = np.linalg.eigvalsh(_bloch_matrix(p, bloch_phase, 2 * basis_size, 2 * n_grid))[:n_levels]
    gap = float(np.max(np.abs(ev - ev2)))
    if gap > cauchy_tol * max(1.0, float(np.max(np.abs(ev2)))):
        raise ResolutionError(f"Bloch eigenvalues moved by {gap:.3g} when the basis doubled")
    return ev2
