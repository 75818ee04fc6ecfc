"""Closed-form functions of y written as products of powers of Jacobi polynomials.

A ``ProductForm`` is  prod_j P_j(sn, cn, dn)^e_j , optionally times
exp(i t am(y)) = [cn + i sn]^t with the continuous amplitude branch.
Values and the first two derivatives come from the product rule and the
exact ring derivatives of each P_j; nothing is differenced.

Non-integer powers of the other factors use the principal branch.  That is
pointwise consistent with the derivative formulas, so residuals are
branch-independent; comparisons of values up to normalization should stay
on an interval where no base crosses the negative real axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elliptic import amplitude, as_modulus, jacobi
from .jring import JPoly, shift_images


def _is_integer(e) -> bool:
    return isinstance(e, (int, np.integer)) or (
        isinstance(e, float) and e.is_integer()
    )


@dataclass(frozen=True)
class Factor:
    base: JPoly
    exponent: complex | float | int

    def derivs(self):
        d1 = self.base.deriv()
        return d1, d1.deriv()


@dataclass
class ProductForm:
    m: float
    factors: list[Factor] = field(default_factory=list)
    am_power: float = 0.0  # exponent t of exp(i t am(y))
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # building ---------------------------------------------------------------
    def times(self, base: JPoly, exponent=1) -> ProductForm:
        if exponent == 0:
            return self
        for i, fac in enumerate(self.factors):
            if fac.base.terms == base.terms:
                merged = list(self.factors)
                e = fac.exponent + exponent
                if e == 0:
                    del merged[i]
                else:
                    merged[i] = Factor(base, e)
                return ProductForm(self.m, merged, self.am_power)
        return ProductForm(self.m, self.factors + [Factor(base, exponent)], self.am_power)

    def times_monomial(self, es=0, ec=0, ed=0) -> ProductForm:
        out = self
        for e, gen in ((es, JPoly.sn), (ec, JPoly.cn), (ed, JPoly.dn)):
            if e != 0:
                out = out.times(gen(self.m), e)
        return out

    def times_form(self, other: ProductForm) -> ProductForm:
        out = ProductForm(self.m, list(self.factors), self.am_power + other.am_power)
        for fac in other.factors:
            out = out.times(fac.base, fac.exponent)
        return out

    def without_am(self) -> ProductForm:
        """Rewrite exp(i t am) as the ordinary factor (cn + i sn)^t (principal branch)."""
        if not self.am_power:
            return self
        base = JPoly.cn(self.m) + JPoly.sn(self.m) * 1j
        return ProductForm(self.m, list(self.factors), 0.0).times(base, self.am_power)

    def shifted(self, kind: str) -> ProductForm:
        """The form of y -> f(y + shift), up to a constant factor.

        ``kind`` is a quarter-period label understood by ``jring.shift_images``.
        """
        images = shift_images(kind, self.m)
        src = self.without_am()
        out = ProductForm(self.m)
        for fac in src.factors:
            poly, (xs, xc, xd) = fac.base.substitute(images)
            scale = poly.max_abs()
            if scale:
                poly = poly * (1.0 / scale)
            out = out.times(poly, fac.exponent)
            out = out.times_monomial(xs * fac.exponent, xc * fac.exponent, xd * fac.exponent)
        return out

    # evaluation -------------------------------------------------------------
    def _derivs(self, fac: Factor):
        key = id(fac)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not fac:
            hit = (fac, *fac.derivs())
            self._cache[key] = hit
        return hit[1], hit[2]

    def __call__(self, y):
        return self.evaluate(y)

    def evaluate(self, y):
        """Return (f, f', f'') at the real points ``y``."""
        y = np.asarray(y, dtype=float)
        s, c, d = jacobi(y, self.m)
        F0 = np.ones(y.shape, dtype=complex)
        F1 = np.zeros(y.shape, dtype=complex)
        F2 = np.zeros(y.shape, dtype=complex)
        if self.am_power:
            t = self.am_power
            F0 = np.exp(1j * t * np.asarray(amplitude(y, self.m)))
            F1 = 1j * t * d * F0
            F2 = (-t * t * d * d - 1j * t * self.m * s * c) * F0
        for fac in self.factors:
            p1, p2 = self._derivs(fac)
            B, B1, B2 = fac.base(s, c, d), p1(s, c, d), p2(s, c, d)
            e = fac.exponent
            if e == 1:
                g0, g1, g2 = B, B1, B2
            elif _is_integer(e):
                e = int(e)
                g0 = B ** e
                g1 = e * B ** (e - 1) * B1
                g2 = e * (e - 1) * B ** (e - 2) * B1 * B1 + e * B ** (e - 1) * B2
            else:
                g0 = np.power(B.astype(complex), e)
                r1 = B1 / B
                g1 = e * g0 * r1
                g2 = g0 * (e * (e - 1) * r1 * r1 + e * B2 / B)
            F0, F1, F2 = F0 * g0, F1 * g0 + F0 * g1, F2 * g0 + 2 * F1 * g1 + F0 * g2
        return F0, F1, F2

    def value(self, y):
        return self.evaluate(y)[0]


def monomial_form(m, es=0, ec=0, ed=0) -> ProductForm:
    return ProductForm(as_modulus(m).m).times_monomial(es, ec, ed)
