"""Composite spaces: combining components, and the parameter families that
push the operator norm to infinity along a chosen line."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._validation import INF, check_p, check_q, inv
from .mms import Space, SpaceError
from .scalar import Scalar, ctx, ssum, to_fraction
from .testspace import DEFAULT_EXPLICIT_CAP, TestSpaceParams, build_explicit

__all__ = [
    "Surd", "Lemma5Params", "Lemma6Params", "combine", "combine_scales",
    "lemma5_components", "model_regime", "lemma6_components",
    "components_to_json", "components_from_json",
    "DIVERGENT", "BAND", "BOUNDED", "UNSPECIFIED",
]

DIVERGENT, BAND, BOUNDED, UNSPECIFIED = "DIVERGENT", "BAND", "BOUNDED", "UNSPECIFIED"


def _isqrt_exact(n):
    r = math.isqrt(n)
    return r if r * r == n else None


def _square_part(n, limit=1000):
    """``(s, m)`` with ``n = s*s*m``; square factors up to ``limit**2`` are pulled out."""
    s, k = 1, 2
    while k <= limit and k * k <= n:
        while n % (k * k) == 0:
            n //= k * k
            s *= k
        k += 1
    return s, n


@dataclass(frozen=True)
class Surd:
    """Exact real ``A + B*sqrt(D)`` with rational ``A, B`` and integer ``D >= 0``."""

    A: Fraction = Fraction(0)
    B: Fraction = Fraction(0)
    D: int = 0

    def __post_init__(self):
        A, B, D = to_fraction(self.A), to_fraction(self.B), int(self.D)
        if D < 0:
            raise ValueError("D must be nonnegative")
        r = _isqrt_exact(D)
        if r is not None:
            A, B, D = A + B * r, Fraction(0), 0
        if B == 0:
            D = 0
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "D", D)

    @classmethod
    def sqrt(cls, n):
        sq, m = _square_part(int(n))
        return cls(0, sq, m)

    @staticmethod
    def lift(x):
        return x if isinstance(x, Surd) else Surd(to_fraction(x))

    def _join(self, other):
        other = Surd.lift(other)
        if self.D and other.D and self.D != other.D:
            raise ValueError("surds with different radicands cannot be combined")
        return other, self.D or other.D

    def __add__(self, other):
        other, D = self._join(other)
        return Surd(self.A + other.A, self.B + other.B, D)

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.A, -self.B, self.D)

    def __sub__(self, other):
        return self + (-Surd.lift(other))

    def __rsub__(self, other):
        return Surd.lift(other) - self

    def __mul__(self, c):
        if isinstance(c, Surd):
            if c.B == 0:
                c = c.A
            elif self.B == 0:
                return c * self.A
            else:
                raise ValueError("product of two irrational surds is not supported")
        c = to_fraction(c)
        return Surd(self.A * c, self.B * c, self.D)

    __rmul__ = __mul__

    def sign(self):
        a, b = self.A, self.B
        if b == 0:
            return (a > 0) - (a < 0)
        sb = 1 if b > 0 else -1
        if a == 0 or (a > 0) == (b > 0):
            return sb
        # opposite signs: compare a^2 with b^2 D
        diff = a * a - b * b * self.D
        if diff == 0:
            return 0
        return (1 if a > 0 else -1) if diff > 0 else sb

    def _cmp(self, other):
        return (self - other).sign()

    def __eq__(self, other):
        if not isinstance(other, (Surd, int, Fraction)):
            return NotImplemented
        return self._cmp(other) == 0

    def __hash__(self):
        return hash((self.A, self.B, self.D))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def mpf(self):
        return ctx.mpf(self.A.numerator) / self.A.denominator + (
            ctx.mpf(self.B.numerator) / self.B.denominator * ctx.sqrt(self.D) if self.D else 0)

    def __float__(self):
        return float(self.mpf())

    def bounds(self, den=10 ** 12):
        """Rational ``(lo, hi)`` with ``lo <= self <= hi`` and ``hi - lo <= 2|B|/den``."""
        if not self.D:
            return self.A, self.A
        r = math.isqrt(self.D * den * den)
        lo_s, hi_s = Fraction(r, den), Fraction(r + 1, den)
        if self.B > 0:
            return self.A + self.B * lo_s, self.A + self.B * hi_s
        return self.A + self.B * hi_s, self.A + self.B * lo_s

    def __repr__(self):
        if not self.D:
            return f"Surd({self.A})"
        return f"Surd({self.A} + {self.B}*sqrt({self.D}))"

    def __str__(self):
        if not self.D:
            return str(self.A)
        return f"{self.A}+{self.B}*sqrt({self.D})"


@dataclass(frozen=True)
class Lemma5Params:
    """Line ``a x - b y = gamma`` (with ``x = 1/r``, ``y = 1/q``), margin ``eps`` and base ``R``.

    ``b = 0`` is allowed (horizontal lines); the matching Corollary-1 spaces then have ``N = 1``.
    """

    p: Fraction
    gamma: Surd
    a: int
    b: int
    R: int
    eps: Fraction

    def __post_init__(self):
        object.__setattr__(self, "p", check_p(self.p))
        object.__setattr__(self, "gamma", Surd.lift(self.gamma))
        for name in ("a", "b", "R"):
            v = getattr(self, name)
            low = 0 if name == "b" else 1
            if int(v) != v or v < low:
                raise ValueError(f"{name} must be an integer >= {low}")
            object.__setattr__(self, name, int(v))
        eps = to_fraction(self.eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        object.__setattr__(self, "eps", eps)

    @property
    def d(self):
        return Surd.sqrt(self.a ** 2 + self.b ** 2)

    @property
    def eps_d(self):
        return self.d * self.eps

    def to_json(self):
        g = self.gamma
        return {"p": str(self.p), "gamma": [str(g.A), str(g.B), g.D], "a": self.a, "b": self.b,
                "R": self.R, "eps": str(self.eps)}

    @classmethod
    def from_json(cls, obj):
        A, B, D = obj["gamma"]
        return cls(to_fraction(obj["p"]), Surd(to_fraction(A), to_fraction(B), int(D)),
                   obj["a"], obj["b"], obj["R"], to_fraction(obj["eps"]))


def _surd_power(R, expo: Surd):
    """``R ** expo`` as a Scalar; exact when ``expo`` is an integer."""
    if R == 1:
        return Scalar(1)
    if not expo.D and expo.A.denominator == 1:
        return Scalar(R) ** int(expo.A)
    return Scalar._raw(ctx.power(ctx.mpf(R), expo.mpf()))


def lemma5_components(params: Lemma5Params, n_max):
    """Corollary-1 tuples ``(p, lam_n, a, b, kappa_n)`` for ``n = 1..n_max``."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    out = []
    for n in range(1, n_max + 1):
        kappa = params.R ** n
        expo = params.gamma * (-n) + params.eps_d * (n + 2)
        out.append((params.p, _surd_power(params.R, expo), params.a, params.b, kappa))
    return out


def model_regime(params: Lemma5Params, q, r):
    """Which of the three cases of the component estimate applies at ``(q, r)``."""
    q, r = check_q(q), check_q(r, "r")
    if inv(q) < inv(r):
        raise ValueError("model_regime needs q <= r")
    x = Surd(params.a * inv(r) - params.b * inv(q))
    g, ed = params.gamma, params.eps_d
    if x == g:
        return DIVERGENT
    if g - ed * 2 < x < g - ed:
        return BAND
    if x <= g - ed * 3:
        return BOUNDED
    return UNSPECIFIED


@dataclass(frozen=True)
class Lemma6Params:
    p: Fraction
    delta: Fraction
    omega: Fraction
    variant: str = "<="

    def __post_init__(self):
        object.__setattr__(self, "p", check_p(self.p))
        dl, om = to_fraction(self.delta), to_fraction(self.omega)
        if not (0 <= om <= dl <= 1):
            raise ValueError("need 0 <= omega <= delta <= 1")
        if self.variant not in ("<=", "<"):
            raise ValueError("variant must be '<=' or '<'")
        object.__setattr__(self, "delta", dl)
        object.__setattr__(self, "omega", om)


EPS_RULES = ("paper", "repaired")


def _eps(n, rule):
    if rule == "paper":
        return Fraction(1, 3 * n)
    if rule == "repaired":
        return Fraction(2, 3 * n * n)
    raise ValueError(f"eps_rule must be one of {EPS_RULES}")


def lemma6_components(params: Lemma6Params, n_max, eps_rule="paper"):
    """The ``n``-th line family for ``n = 1..n_max``: ``a_n = n``, ``b_n = n^2``, ``R = n^n``.

    ``eps_rule='paper'`` uses ``eps_n = 1/(3n)``.  With it the strict variant's
    membership condition ``a_n w - b_n d in (gamma_n - 2 d_n eps_n, gamma_n - d_n eps_n)``
    only holds when ``d_n eps_n`` lies in (1/2, 1), which happens for ``n = 2``
    alone; ``'repaired'`` uses ``eps_n = 2/(3n^2)`` so ``d_n eps_n`` stays in
    (2/3, 0.95) for every ``n``.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    out = []
    for n in range(1, n_max + 1):
        a, b = n, n * n
        eps = _eps(n, eps_rule)
        d = Surd.sqrt(a * a + b * b)
        shift = Fraction(1, n) if params.variant == "<" else Fraction(0)
        gamma = Surd(a * (params.omega - shift) - b * params.delta) + d * (3 * eps)
        lp = Lemma5Params(params.p, gamma, a, b, max(n ** n, 1), eps)
        if params.variant == "<":
            x = Surd(a * params.omega - b * params.delta)
            if not (gamma - d * (2 * eps) < x < gamma - d * eps):
                raise ValueError(f"membership check fails at n={n} with eps rule {eps_rule!r}")
        out.append(lp)
    return out


# ---------------------------------------------------------------------------
# combining spaces


def _diameter(space):
    return max(space.dist.ravel().tolist()) if len(space) > 1 else 0


def combine_scales(masses):
    """``c_1 = 1``; ``c_n`` the least power of two with ``c_n mu_n >= 2^n sum_{j<n} c_j mu_j``."""
    scales = []
    acc = Scalar(0)
    for n, mu in enumerate(masses, start=1):
        if n == 1:
            c = Scalar(1)
        else:
            need = Scalar.pow2(n) * acc / mu
            e = 0
            if need > Scalar(1):
                e = max(0, int(ctx.floor(need.log2())) - 1)
                while Scalar.pow2(e) < need:
                    e += 1
            c = Scalar.pow2(e)
        scales.append(c)
        acc = acc + c * mu
    return scales


def combine(components, n_trunc=None, cap=DEFAULT_EXPLICIT_CAP, scales=None):
    """Disjoint union of the first ``n_trunc`` components.

    Points of components ``n != m`` (1-based) sit at distance
    ``base + max(n, m)`` with ``base = 2`` whenever every component has
    diameter at most 4 (otherwise the largest diameter, to keep the triangle
    inequality).  Measures are rescaled by :func:`combine_scales` unless
    ``scales`` is given.
    """
    comps = list(components)
    if n_trunc is None:
        n_trunc = len(comps)
    if not 1 <= n_trunc <= len(comps):
        raise ValueError("n_trunc must lie in 1..len(components)")
    comps = [c if isinstance(c, Space) else build_explicit(c, cap=cap) for c in comps[:n_trunc]]
    sizes = [len(c) for c in comps]
    total = sum(sizes)
    if total > cap:
        raise SpaceError(f"combined space has {total} points, above the explicit cap {cap}")
    diam = max(Fraction(_diameter(c)) for c in comps)
    base = 2 if diam <= 4 else diam
    if scales is None:
        scales = combine_scales([ssum(c.weights) for c in comps])
    offsets = np.cumsum([0] + sizes)
    integral = all(c.integral_metric for c in comps) and Fraction(base).denominator == 1
    if integral:
        dist = np.zeros((total, total), dtype=np.int64)
    else:
        dist = np.empty((total, total), dtype=object)
    for n in range(n_trunc):
        for m in range(n_trunc):
            blk = (slice(offsets[n], offsets[n + 1]), slice(offsets[m], offsets[m + 1]))
            if n == m:
                dist[blk] = comps[n].dist if integral else comps[n].dist.astype(object)
            else:
                val = base + max(n, m) + 1
                dist[blk] = int(val) if integral else Fraction(val)
    if not integral:
        for i in range(total):
            for j in range(total):
                dist[i, j] = Fraction(dist[i, j])
    points, weights, labels = [], [], []
    for n, c in enumerate(comps, start=1):
        for pt, w, lab in zip(c.points, c.weights, c.labels or c.points):
            points.append(f"{n}:{pt}")
            labels.append(f"{n}:{lab}")
            weights.append(w * scales[n - 1])
    return Space.build(points, dist, weights, labels=labels, check=False)


def components_to_json(components, scales=None):
    """Component-list descriptor: JSON array of ``{"testspace"|"space": ..., "scale": ...}``."""
    out = []
    for i, c in enumerate(components):
        item = {"testspace": c.to_json()} if isinstance(c, TestSpaceParams) else {"space": c.to_json()}
        if scales is not None:
            item["scale"] = scales[i].to_json() if isinstance(scales[i], Scalar) else str(scales[i])
        out.append(item)
    return json.dumps(out, sort_keys=True)


def components_from_json(text):
    items = json.loads(text)
    if not isinstance(items, list):
        raise ValueError("component descriptor must be a JSON array")
    comps, scales = [], []
    for it in items:
        if "testspace" in it:
            comps.append(TestSpaceParams.from_json(it["testspace"]))
        elif "space" in it:
            comps.append(Space.from_json(it["space"]))
        else:
            raise ValueError("each component needs a 'testspace' or 'space' entry")
        scales.append(Scalar.from_json(it["scale"]) if "scale" in it else None)
    if all(s is None for s in scales):
        scales = None
    elif any(s is None for s in scales):
        raise ValueError("either every component or none carries a scale")
    return comps, scales
