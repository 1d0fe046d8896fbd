"""Vectorized double-double arithmetic on numpy arrays.

A value is the unevaluated sum ``hi + lo`` with ``|lo| <= ulp(hi) / 2``,
giving roughly 106 bits of precision.  Only what the resonance identities
need is provided: ``+ - * /``, integer powers and conversion back to float.
"""

from __future__ import annotations

import numpy as np

_SPLITTER = 134217729.0  # 2^27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


class DD:
    """Double-double number (or array of them)."""

    __slots__ = ("hi", "lo")
    __array_priority__ = 100  # keep ndarray op DD from broadcasting elementwise

    def __init__(self, hi, lo=0.0):
        self.hi = np.asarray(hi, dtype=float)
        self.lo = np.asarray(lo, dtype=float) + np.zeros_like(self.hi)

    @staticmethod
    def of(x) -> "DD":
        return x if isinstance(x, DD) else DD(x)

    def __float__(self):
        return float(self.hi + self.lo)

    def to_float(self) -> np.ndarray:
        return self.hi + self.lo

    def __neg__(self):
        return DD(-self.hi, -self.lo)

    def __add__(self, other):
        o = DD.of(other)
        s, e = two_sum(self.hi, o.hi)
        t, f = two_sum(self.lo, o.lo)
        e = e + t
        s, e = _quick_two_sum(s, e)
        e = e + f
        return DD(*_quick_two_sum(s, e))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-DD.of(other))

    def __rsub__(self, other):
        return DD.of(other) + (-self)

    def __mul__(self, other):
        o = DD.of(other)
        p, e = two_prod(self.hi, o.hi)
        e = e + (self.hi * o.lo + self.lo * o.hi)
        return DD(*_quick_two_sum(p, e))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = DD.of(other)
        q1 = self.hi / o.hi
        r = self - o * q1
        q2 = r.hi / o.hi
        r = r - o * q2
        q3 = r.hi / o.hi
        q1, q2 = _quick_two_sum(q1, q2)
        return DD(q1, q2) + q3

    def __rtruediv__(self, other):
        return DD.of(other) / self

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        out = DD(np.ones_like(self.hi))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __abs__(self):
        sign = np.where(self.hi < 0, -1.0, 1.0)
        return DD(sign * self.hi, sign * self.lo)

    def __repr__(self):
        return f"DD({self.hi!r}, {self.lo!r})"
