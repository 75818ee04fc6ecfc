"""Jacobi elliptic functions for real arguments and parameter 0 < m < 1.

sn, cn, dn are computed with the descending Landen (AGM) scheme, see
DLMF 22.20(ii).  Everything here takes the *parameter* m (not the
modulus k = sqrt(m)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

_AGM_TOL = 1e-17
_MAX_AGM = 40


@dataclass(frozen=True)
class EllipticModulus:
    m: float

    def __post_init__(self):
        m = float(self.m)
        if not math.isfinite(m) or not 0.0 < m < 1.0:
            raise DomainError(f"elliptic parameter must satisfy 0 < m < 1, got {self.m!r}")
        object.__setattr__(self, "m", m)

    @property
    def k(self) -> float:
        return math.sqrt(self.m)

    @property
    def kprime(self) -> float:
        return math.sqrt(1.0 - self.m)


@dataclass(frozen=True)
class EllipticPoint:
    y: np.ndarray | float
    m: EllipticModulus
    sn: np.ndarray | float
    cn: np.ndarray | float
    dn: np.ndarray | float


@dataclass(frozen=True)
class QuarterPeriods:
    K: float
    Kprime: float


def as_modulus(m) -> EllipticModulus:
    return m if isinstance(m, EllipticModulus) else EllipticModulus(m)


@lru_cache(maxsize=256)
def _agm_table(m: float):
    a, b, c = [1.0], [math.sqrt(1.0 - m)], [math.sqrt(m)]
    for _ in range(_MAX_AGM):
        an, bn = a[-1], b[-1]
        a.append(0.5 * (an + bn))
        b.append(math.sqrt(an * bn))
        c.append(0.5 * (an - bn))
        if abs(c[-1]) < _AGM_TOL * a[-1]:
            break
    return tuple(a), tuple(c)


@lru_cache(maxsize=256)
def _quarter_period(m: float) -> float:
    a, _ = _agm_table(m)
    return math.pi / (2.0 * a[-1])


def quarter_periods(m) -> QuarterPeriods:
    """Return K(m) and K'(m) = K(1 - m), both via the AGM."""
    m = as_modulus(m).m
    return QuarterPeriods(_quarter_period(m), _quarter_period(1.0 - m))


def ellipk(m) -> float:
    return _quarter_period(as_modulus(m).m)


def _check_y(y):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("argument of the Jacobi functions must be finite")
    return y


def _amplitude_reduced(y: np.ndarray, m: float) -> np.ndarray:
    a, c = _agm_table(m)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * y
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] / a[j] * np.sin(phi)))
    return phi


def _reduce(y: np.ndarray, m: float):
    period = 4.0 * _quarter_period(m)
    turns = np.round(y / period)
    return y - turns * period, turns


def amplitude(y, m) -> np.ndarray | float:
    """Continuous amplitude am(y|m), with am(0) = 0 and am(y + 2K) = am(y) + pi."""
    mod = as_modulus(m)
    y = _check_y(y)
    yr, turns = _reduce(y, mod.m)
    out = _amplitude_reduced(yr, mod.m) + 2.0 * math.pi * turns
    return out if out.ndim else float(out)


def eval_jacobi(y, m) -> EllipticPoint:
    mod = as_modulus(m)
    y = _check_y(y)
    yr, _ = _reduce(y, mod.m)
    phi = _amplitude_reduced(yr, mod.m)
    sn = np.sin(phi)
    cn = np.cos(phi)
    # dn >= sqrt(1-m) > 0 on the real line; the AGM ratio cn/cos(phi1-phi0)
    # is 0/0 at odd multiples of K.
    dn = np.sqrt(1.0 - mod.m * sn * sn)
    if y.ndim == 0:
        return EllipticPoint(float(y), mod, float(sn), float(cn), float(dn))
    return EllipticPoint(y, mod, sn, cn, dn)


def jacobi(y, m):
    """Shorthand returning the bare (sn, cn, dn) triple."""
    pt = eval_jacobi(y, m)
    return pt.sn, pt.cn, pt.dn


def phase_power_case1(y, m, t):
    """[cn + i sn]^t on the real line, continued through the amplitude.

    cn + i sn = exp(i am(y)) and d am/dy = dn, so the power is exp(i t am).
    """
    return np.exp(1j * t * np.asarray(amplitude(y, m)))


def phase_case2(y, m):
    """Argument of dn + i sqrt(m) sn; bounded by arcsin(sqrt(m)) since dn > 0."""
    mod = as_modulus(m)
    sn, _, dn = jacobi(y, mod)
    return np.arctan2(mod.k * sn, dn)


def phase_power_case2(y, m, t):
    """[dn + i sqrt(m) sn]^t; the base is unimodular with phase derivative sqrt(m) cn."""
    return np.exp(1j * t * np.asarray(phase_case2(y, m)))


def phase_power_case3(y, m, t):
    """[dn + sqrt(m) cn]^t as a real power.

    dn^2 - m cn^2 = 1 - m > 0 with dn > 0, so the base never leaves (0, inf).
    """
    mod = as_modulus(m)
    _, cn, dn = jacobi(y, mod)
    return np.power(dn + mod.k * cn, t)


def shifted_jacobi(y, tau, m):
    """(sn, cn, dn) at the complex point y + i*tau, from real evaluations only.

    Uses the addition theorem together with Jacobi's imaginary transformation
    sn(i tau|m) = i sc(tau|1-m), written with a common denominator so that it
    stays finite at tau = K'.
    """
    mod = as_modulus(m)
    s, c, d = jacobi(y, mod)
    S, C, D = jacobi(tau, 1.0 - mod.m)
    den = C * C + mod.m * s * s * S * S
    sn = (s * D + 1j * S * C * c * d) / den
    cn = (c * C - 1j * s * d * S * D) / den
    dn = (d * D * C - 1j * mod.m * s * c * S) / den
    return sn, cn, dn
