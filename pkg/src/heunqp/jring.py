"""Polynomials in (sn, cn, dn) reduced by cn^2 = 1 - sn^2, dn^2 = 1 - m sn^2.

Every element is kept in the normal form  sum c_{j,a,b} sn^j cn^a dn^b  with
a, b in {0, 1}.  The ring is closed under d/dy (sn' = cn dn, cn' = -sn dn,
dn' = -m sn cn), which is what makes the polynomial ansatz computable by
pure bookkeeping.  Coefficients may be Python/numpy numbers or sympy
expressions; the arithmetic only uses +, -, *.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Callable, Mapping

import numpy as np

Key = tuple[int, int, int]


def _is_zero(v) -> bool:
    if hasattr(v, "is_zero") and not isinstance(v, (int, float, complex, np.number)):
        import sympy

        return sympy.expand(v) == 0
    return v == 0


class JPoly:
    __slots__ = ("terms", "m")

    def __init__(self, terms: Mapping[Key, object] | None = None, m=None):
        self.m = m
        self.terms: dict[Key, object] = {}
        if terms:
            acc = defaultdict(int)
            for (j, a, b), v in terms.items():
                for key, f in _reduce_monomial(j, a, b, m):
                    acc[key] = acc[key] + f * v
            self.terms = {k: v for k, v in acc.items() if not _is_zero(v)}

    # construction ------------------------------------------------------
    @classmethod
    def const(cls, v, m) -> JPoly:
        return cls({(0, 0, 0): v}, m)

    @classmethod
    def mono(cls, j: int, a: int = 0, b: int = 0, coeff=1, m=None) -> JPoly:
        return cls({(j, a, b): coeff}, m)

    @classmethod
    def sn(cls, m) -> JPoly:
        return cls.mono(1, 0, 0, m=m)

    @classmethod
    def cn(cls, m) -> JPoly:
        return cls.mono(0, 1, 0, m=m)

    @classmethod
    def dn(cls, m) -> JPoly:
        return cls.mono(0, 0, 1, m=m)

    def _raw(self, terms) -> JPoly:
        out = JPoly(m=self.m)
        out.terms = {k: v for k, v in terms.items() if not _is_zero(v)}
        return out

    def _coerce(self, other) -> JPoly:
        if isinstance(other, JPoly):
            return other
        return JPoly.const(other, self.m)

    # arithmetic --------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0) + v
        return self._raw(acc)

    __radd__ = __add__

    def __neg__(self):
        return self._raw({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, JPoly):
            return self._raw({k: v * other for k, v in self.terms.items()})
        acc = defaultdict(int)
        for (j1, a1, b1), v1 in self.terms.items():
            for (j2, a2, b2), v2 in other.terms.items():
                for key, f in _reduce_monomial(j1 + j2, a1 + a2, b1 + b2, self.m):
                    acc[key] = acc[key] + f * v1 * v2
        return self._raw(acc)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = JPoly.const(1, self.m)
        for _ in range(n):
            out = out * self
        return out

    def deriv(self) -> JPoly:
        m = self.m
        acc = defaultdict(int)

        def put(j, a, b, v):
            for key, f in _reduce_monomial(j, a, b, m):
                acc[key] = acc[key] + f * v

        for (j, a, b), v in self.terms.items():
            if j:
                put(j - 1, a + 1, b + 1, j * v)
            if a:
                put(j + 1, a - 1, b + 1, -a * v)
            if b:
                put(j + 1, a + 1, b - 1, -b * m * v)
        return self._raw(acc)

    # inspection --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def keys(self):
        return sorted(self.terms)

    def coeff(self, key: Key):
        return self.terms.get(key, 0)

    def max_abs(self) -> float:
        return max((abs(complex(v)) for v in self.terms.values()), default=0.0)

    def map_coeffs(self, fn: Callable) -> JPoly:
        return self._raw({k: fn(v) for k, v in self.terms.items()})

    def __repr__(self):
        inner = " + ".join(f"({v})*s^{j}c^{a}d^{b}" for (j, a, b), v in sorted(self.terms.items()))
        return f"JPoly({inner or '0'})"

    # evaluation --------------------------------------------------------
    def __call__(self, sn, cn, dn):
        sn = np.asarray(sn)
        out = np.zeros(np.broadcast(sn, cn, dn).shape, dtype=complex)
        if not self.terms:
            return out
        jmax = max(j for j, _, _ in self.terms)
        spow = [np.ones_like(sn, dtype=float)]
        for _ in range(jmax):
            spow.append(spow[-1] * sn)
        for (j, a, b), v in self.terms.items():
            term = complex(v) * spow[j]
            if a:
                term = term * cn
            if b:
                term = term * dn
            out = out + term
        return out

    # substitutions -----------------------------------------------------
    def substitute(self, images) -> tuple[JPoly, tuple[int, int, int]]:
        """Replace (sn, cn, dn) by constant * Laurent monomials.

        ``images`` gives, for sn, cn and dn in turn, a pair
        ``(const, (es, ec, ed))`` meaning const * sn^es cn^ec dn^ed.
        Returns ``(P, (xs, xc, xd))`` with the substituted polynomial equal to
        ``sn^xs cn^xc dn^xd * P``.
        """
        pieces = []
        for (j, a, b), v in self.terms.items():
            const = v
            exps = [0, 0, 0]
            for power, (c0, e) in zip((j, a, b), images):
                if power:
                    const = const * c0 ** power
                    for i in range(3):
                        exps[i] += power * e[i]
            pieces.append((const, exps))
        if not pieces:
            return JPoly(m=self.m), (0, 0, 0)
        low = tuple(min(p[1][i] for p in pieces) for i in range(3))
        terms = defaultdict(int)
        for const, exps in pieces:
            key = tuple(exps[i] - low[i] for i in range(3))
            terms[key] = terms[key] + const
        return JPoly(dict(terms), self.m), low


def _reduce_monomial(j: int, a: int, b: int, m):
    return _reduce_cached(j, a, b, m) if _hashable(m) else _reduce_uncached(j, a, b, m)


def _hashable(m) -> bool:
    try:
        hash(m)
    except TypeError:
        return False
    return True


_CACHE: dict = {}


def _reduce_cached(j, a, b, m):
    key = (j, a, b, m)
    hit = _CACHE.get(key)
    if hit is None:
        hit = _reduce_uncached(j, a, b, m)
        if len(_CACHE) > 200_000:
            _CACHE.clear()
        _CACHE[key] = hit
    return hit


def _reduce_uncached(j, a, b, m):
    # sn^j cn^a dn^b with cn^2 -> 1 - sn^2 and dn^2 -> 1 - m sn^2
    terms = {(j, 0, 0): 1}
    for _ in range(a // 2):
        nxt = defaultdict(int)
        for (jj, _, _), v in terms.items():
            nxt[(jj, 0, 0)] += v
            nxt[(jj + 2, 0, 0)] -= v
        terms = nxt
    for _ in range(b // 2):
        nxt = defaultdict(int)
        for (jj, _, _), v in terms.items():
            nxt[(jj, 0, 0)] += v
            nxt[(jj + 2, 0, 0)] = nxt[(jj + 2, 0, 0)] - m * v
        terms = nxt
    return tuple(((jj, a % 2, b % 2), v) for (jj, _, _), v in terms.items())


def shift_images(kind: str, m) -> tuple:
    """Images of (sn, cn, dn) under y -> y + shift, as constant * Laurent monomial.

    ``kind`` is one of ``"K"``, ``"iK'"``, ``"K+iK'"`` (quarter periods) or
    ``"2K"``, ``"2iK'"``, ``"2K+2iK'"`` (half periods).  Uses the standard
    table of quarter/half period translations.
    """
    if kind in ("2K", "2iK'", "2K+2iK'"):
        signs = {"2K": (-1, -1, 1), "2iK'": (1, -1, -1), "2K+2iK'": (-1, 1, -1)}[kind]
        return tuple((sg, e) for sg, e in zip(signs, ((1, 0, 0), (0, 1, 0), (0, 0, 1))))
    try:
        import sympy

        symbolic = isinstance(m, sympy.Basic)
    except ImportError:  # pragma: no cover
        symbolic = False
    if symbolic:
        import sympy

        k, kp, I = sympy.sqrt(m), sympy.sqrt(1 - m), sympy.I
    else:
        k, kp, I = np.sqrt(m), np.sqrt(1.0 - m), 1j
    if kind == "K":
        return ((1, (0, 1, -1)), (-kp, (1, 0, -1)), (kp, (0, 0, -1)))
    if kind == "iK'":
        return ((1 / k, (-1, 0, 0)), (-I / k, (-1, 0, 1)), (-I, (-1, 1, 0)))
    if kind == "K+iK'":
        return ((1 / k, (0, -1, 1)), (-I * kp / k, (0, -1, 0)), (I * kp, (1, -1, 0)))
    raise ValueError(f"unknown shift {kind!r}")
