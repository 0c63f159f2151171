"""Input validation helpers shared by the estimators and the CLI."""
from __future__ import annotations

import math
from fractions import Fraction

from .scalar import to_fraction

INF = math.inf


def parse_exponent(x, name="q", allow_inf=True):
    """Rational exponent, or ``math.inf`` for ``inf``/``oo``/``None``-like input."""
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity", "oo", "∞"):
        x = INF
    if isinstance(x, float) and math.isinf(x):
        if not allow_inf:
            raise ValueError(f"{name} must be finite")
        return INF
    try:
        return to_fraction(x)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ValueError(f"{name} must be a rational number, got {x!r}") from None


def check_p(p):
    p = parse_exponent(p, "p", allow_inf=False)
    if p <= 1:
        raise ValueError("p must exceed 1")
    return p


def check_q(q, name="q"):
    q = parse_exponent(q, name)
    if q != INF and q < 1:
        raise ValueError(f"{name} must lie in [1, inf]")
    return q


def inv(q):
    """``1/q`` with the convention ``1/inf = 0``."""
    return Fraction(0) if q == INF else 1 / Fraction(q)


def fmt_exponent(q):
    if q == INF:
        return "inf"
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def check_random_state(seed):
    import numpy as np
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
