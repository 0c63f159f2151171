"""Hybrid nonnegative scalars: exact rationals or wide-exponent floats.

Test-space weights grow doubly exponentially, so a plain double cannot hold
them and a log stored as a double loses every digit of the ratios we care
about.  ``Scalar`` keeps exact :class:`fractions.Fraction` values while they
are of moderate size and otherwise switches to an mpmath binary float whose
exponent is an unbounded Python integer (a log-domain number with an exact
integer part).
"""
from __future__ import annotations

import math
import os
from fractions import Fraction
from numbers import Rational

from mpmath.ctx_mp import MPContext

__all__ = ["Scalar", "ctx", "arith_mode", "EXACT_BIT_LIMIT", "to_fraction"]

ctx = MPContext()
ctx.prec = 256

# exact payloads whose numerator or denominator exceed this many bits are demoted
EXACT_BIT_LIMIT = 4096

_MODES = ("exact", "log", "auto")


def arith_mode():
    """Arithmetic tier selected through ``LML_MODE`` (default ``auto``)."""
    mode = os.environ.get("LML_MODE", "auto").strip().lower()
    if mode not in _MODES:
        raise ValueError(f"LML_MODE must be one of {_MODES}, got {mode!r}")
    return mode


def to_fraction(x):
    """Parse ints, Fractions and ``"num/den"`` strings into a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational")


def _too_big(fr):
    return (fr.numerator.bit_length() > EXACT_BIT_LIMIT
            or fr.denominator.bit_length() > EXACT_BIT_LIMIT)


class Scalar:
    """Nonnegative number in exact or log mode.

    Arithmetic between two exact values stays exact (powers only for integer
    exponents); anything else promotes to log mode.
    """

    __slots__ = ("_v",)

    def __init__(self, value=0):
        if isinstance(value, Scalar):
            self._v = value._v
            return
        if isinstance(value, ctx.mpf):
            v = value
        elif isinstance(value, float):
            if math.isnan(value):
                raise ValueError("NaN is not a Scalar")
            v = ctx.mpf(value)
        else:
            v = to_fraction(value)
        if v < 0:
            raise ValueError(f"Scalar must be nonnegative, got {value!r}")
        self._v = self._normalise(v)

    @staticmethod
    def _normalise(v):
        mode = arith_mode()
        if isinstance(v, Fraction):
            if mode == "log" or (mode == "auto" and _too_big(v)):
                return ctx.mpf(v.numerator) / v.denominator
            return v
        if mode == "exact":
            raise OverflowError("log-mode value produced while LML_MODE=exact")
        return v

    @classmethod
    def _raw(cls, v):
        s = object.__new__(cls)
        s._v = cls._normalise(v)
        return s

    # construction helpers
    @classmethod
    def pow2(cls, e):
        """Exactly ``2**e`` for an integer (possibly astronomically large) ``e``."""
        e = int(e)
        if abs(e) <= EXACT_BIT_LIMIT and arith_mode() != "log":
            return cls._raw(Fraction(2) ** e)
        return cls._raw(ctx.ldexp(ctx.mpf(1), e))

    @classmethod
    def from_log(cls, ln):
        """Value with natural logarithm ``ln`` (``-inf`` gives zero)."""
        if ln == -math.inf:
            return cls._raw(ctx.mpf(0))
        return cls._raw(ctx.exp(ctx.mpf(ln)))

    # inspection
    @property
    def mode(self):
        return "exact" if isinstance(self._v, Fraction) else "log"

    @property
    def is_exact(self):
        return isinstance(self._v, Fraction)

    @property
    def raw(self):
        """Underlying Fraction or mpf."""
        return self._v

    def as_fraction(self):
        if not self.is_exact:
            raise ValueError("Scalar is in log mode")
        return self._v

    def as_mpf(self):
        v = self._v
        if isinstance(v, Fraction):
            return ctx.mpf(v.numerator) / v.denominator
        return v

    def log(self):
        """Natural log as an mpf (``-inf`` for zero)."""
        v = self.as_mpf()
        if v == 0:
            return ctx.ninf
        return ctx.log(v)

    def log2(self):
        v = self.as_mpf()
        if v == 0:
            return ctx.ninf
        return ctx.log(v, 2)

    def to_log(self):
        return Scalar._raw(self.as_mpf()) if arith_mode() != "exact" else self

    def __float__(self):
        v = self.as_mpf()
        if v > ctx.mpf("1e308"):
            return math.inf
        return float(v)

    def __bool__(self):
        return self._v != 0

    def __repr__(self):
        if self.is_exact:
            return f"Scalar({self._v})"
        return f"Scalar(log={ctx.nstr(self.log(), 17)})"

    def __str__(self):
        if self.is_exact:
            return str(self._v)
        return ctx.nstr(self._v, 17)

    # arithmetic
    @staticmethod
    def _pair(a, b):
        if not isinstance(b, Scalar):
            b = Scalar(b)
        x, y = a._v, b._v
        if isinstance(x, Fraction) and isinstance(y, Fraction):
            return x, y
        if isinstance(x, Fraction):
            x = ctx.mpf(x.numerator) / x.denominator
        if isinstance(y, Fraction):
            y = ctx.mpf(y.numerator) / y.denominator
        return x, y

    def __add__(self, other):
        x, y = self._pair(self, other)
        return Scalar._raw(x + y)

    __radd__ = __add__

    def __mul__(self, other):
        x, y = self._pair(self, other)
        return Scalar._raw(x * y)

    __rmul__ = __mul__

    def __truediv__(self, other):
        x, y = self._pair(self, other)
        if y == 0:
            raise ZeroDivisionError("Scalar division by zero")
        return Scalar._raw(x / y)

    def __rtruediv__(self, other):
        return Scalar(other) / self

    def monus(self, other):
        """Truncated difference ``max(self - other, 0)``."""
        x, y = self._pair(self, other)
        d = x - y
        return Scalar._raw(d if d > 0 else type(d)(0))

    def __pow__(self, e):
        if isinstance(e, Scalar):
            e = e.raw
        if isinstance(e, int) or (isinstance(e, Fraction) and e.denominator == 1):
            e = int(e)
            v = self._v
            if isinstance(v, Fraction) and (v.numerator.bit_length()
                                            + v.denominator.bit_length()) * abs(e) <= 2 * EXACT_BIT_LIMIT:
                if v == 0 and e < 0:
                    raise ZeroDivisionError("0 to a negative power")
                return Scalar._raw(v ** e)
            return Scalar._raw(self.as_mpf() ** e)
        x = self.as_mpf()
        if x == 0:
            if e > 0:
                return Scalar._raw(ctx.mpf(0))
            raise ZeroDivisionError("0 to a nonpositive power")
        if isinstance(e, Fraction):
            e = ctx.mpf(e.numerator) / e.denominator
        return Scalar._raw(x ** ctx.mpf(e))

    # comparisons
    def _cmp(self, other):
        x, y = self._pair(self, other)
        return (x > y) - (x < y)

    def __eq__(self, other):
        if not isinstance(other, (Scalar, int, Fraction, float)) and not isinstance(other, ctx.mpf):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        if self.is_exact:
            return hash(self._v)
        return hash(("log", str(self._v)))

    def rel_diff(self, other):
        """``|a-b| / max(a,b)`` as a float (0 when both vanish)."""
        x, y = self.as_mpf(), Scalar(other).as_mpf()
        m = max(x, y)
        if m == 0:
            return 0.0
        return float(abs(x - y) / m)

    # serialisation
    def to_json(self):
        if self.is_exact:
            v = self._v
            return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        return {"log": ctx.nstr(self.log(), 40)}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, dict):
            ln = obj["log"]
            if isinstance(ln, str) and ln.strip() in ("-inf", "-Infinity"):
                return cls._raw(ctx.mpf(0))
            return cls._raw(ctx.exp(ctx.mpf(ln)))
        return cls(to_fraction(obj) if not isinstance(obj, float) else obj)


def ssum(values):
    """Sum of Scalars, promoting once instead of per addition."""
    vals = [v if isinstance(v, Scalar) else Scalar(v) for v in values]
    if all(v.is_exact for v in vals):
        return Scalar._raw(sum((v.raw for v in vals), Fraction(0)))
    return Scalar._raw(ctx.fsum(v.as_mpf() for v in vals))


def smax(values):
    vals = [v if isinstance(v, Scalar) else Scalar(v) for v in values]
    if not vals:
        return Scalar(0)
    best = vals[0]
    for v in vals[1:]:
        if v > best:
            best = v
    return best


__all__ += ["ssum", "smax"]
