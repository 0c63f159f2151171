"""Finite metric measure spaces, nonnegative functions on them and their
distribution functions."""
from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .scalar import Scalar, ctx, ssum, to_fraction

__all__ = [
    "Space", "Fn", "StepFn", "SpaceError",
    "ball", "distribution", "distribution_from_pairs", "total_measure",
    "support_check", "unify", "wrap",
]


class SpaceError(ValueError):
    """Malformed space, function or point reference."""


def unify(scalars):
    """Raw payloads of ``scalars`` in one common domain.

    Returns ``(values, exact)`` where values are Fractions when every input is
    exact and mpmath floats otherwise.
    """
    scalars = [s if isinstance(s, Scalar) else Scalar(s) for s in scalars]
    if all(s.is_exact for s in scalars):
        return [s.raw for s in scalars], True
    return [s.as_mpf() for s in scalars], False


def wrap(raw):
    return Scalar._raw(raw)


@dataclass(frozen=True)
class Space:
    """Explicit finite metric measure space.

    ``dist`` is a square numpy array of nonnegative rationals (an integer
    array when every distance is integral, otherwise an object array of
    Fractions).  Weights are strictly positive :class:`Scalar` values.
    """

    points: tuple
    dist: np.ndarray
    weights: tuple
    labels: tuple | None = None
    _index: dict = field(default=None, repr=False, compare=False)

    @classmethod
    def build(cls, points, dist, weights, labels=None, check=True):
        points = tuple(points)
        n = len(points)
        if n == 0:
            raise SpaceError("empty space")
        if len(set(points)) != n:
            raise SpaceError("duplicate point ids")
        d = _as_dist_array(dist, n)
        w = tuple(x if isinstance(x, Scalar) else Scalar(x) for x in weights)
        if len(w) != n:
            raise SpaceError(f"expected {n} weights, got {len(w)}")
        if any(not x for x in w):
            raise SpaceError("all weights must be strictly positive")
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != n:
                raise SpaceError("labels length mismatch")
        if check:
            _check_metric(d)
        index = {pt: i for i, pt in enumerate(points)}
        return cls(points, d, w, labels, index)

    def __len__(self):
        return len(self.points)

    def index(self, point):
        try:
            return self._index[point]
        except KeyError:
            raise SpaceError(f"unknown point id {point!r}") from None

    @property
    def integral_metric(self):
        return self.dist.dtype != object

    def distinct_distances(self):
        """Sorted distinct distances (including 0)."""
        if self.integral_metric:
            return [int(v) for v in np.unique(self.dist)]
        return sorted(set(self.dist.ravel().tolist()))

    # serialisation
    def to_json(self):
        n = len(self)
        upper = []
        for i in range(n):
            for j in range(i + 1, n):
                v = Fraction(self.dist[i, j])
                upper.append(str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}")
        return {
            "points": [str(p) for p in self.points],
            "dist": upper,
            "weights": [w.to_json() for w in self.weights],
            "labels": list(self.labels) if self.labels is not None else None,
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj, check=True):
        pts = obj["points"]
        n = len(pts)
        upper = [to_fraction(x) for x in obj["dist"]]
        if len(upper) != n * (n - 1) // 2:
            raise SpaceError("condensed distance vector has wrong length")
        full = [[Fraction(0)] * n for _ in range(n)]
        it = iter(upper)
        for i in range(n):
            for j in range(i + 1, n):
                full[i][j] = full[j][i] = next(it)
        weights = [Scalar.from_json(w) for w in obj["weights"]]
        return cls.build(pts, full, weights, obj.get("labels"), check=check)

    @classmethod
    def loads(cls, text, check=True):
        return cls.from_json(json.loads(text), check=check)


def _as_dist_array(dist, n):
    if isinstance(dist, np.ndarray) and dist.dtype != object:
        arr = np.asarray(dist)
        if arr.shape != (n, n):
            raise SpaceError("distance matrix shape mismatch")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                # non-integral floats: go through Fractions to stay exact
                return _as_dist_array(arr.astype(object), n)
            arr = arr.astype(np.int64)
        return arr.astype(np.int64)
    rows = [[to_fraction(x) for x in row] for row in dist]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise SpaceError("distance matrix shape mismatch")
    if all(x.denominator == 1 for r in rows for x in r):
        return np.array([[int(x) for x in r] for r in rows], dtype=np.int64)
    arr = np.empty((n, n), dtype=object)
    for i, r in enumerate(rows):
        for j, x in enumerate(r):
            arr[i, j] = x
    return arr


def _check_metric(d):
    n = d.shape[0]
    for i in range(n):
        if d[i, i] != 0:
            raise SpaceError("distance matrix must have zero diagonal")
    if not (d == d.T).all():
        raise SpaceError("distance matrix must be symmetric")
    off = d[~np.eye(n, dtype=bool)]
    if off.size == 0:
        return
    if any(x <= 0 for x in off.tolist()):
        raise SpaceError("distinct points must be at positive distance")
    lo, hi = min(off.tolist()), max(off.tolist())
    if hi <= 2 * lo:
        # every sum of two positive distances already dominates any distance
        return
    for k in range(n):
        via = d[:, k][:, None] + d[k, :][None, :]
        if (d > via).any():
            i, j = map(int, np.argwhere(d > via)[0])
            raise SpaceError(f"triangle inequality fails for ({i},{j}) via {k}")


@dataclass(frozen=True)
class Fn:
    """Nonnegative function on a space, one Scalar per point."""

    values: tuple

    def __init__(self, values):
        vals = tuple(v if isinstance(v, Scalar) else Scalar(v) for v in values)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    @classmethod
    def indicator(cls, space, members):
        idx = {space.index(m) for m in members}
        return cls([1 if i in idx else 0 for i in range(len(space))])

    @classmethod
    def constant(cls, space, c=1):
        return cls([c] * len(space))

    def check(self, space):
        if len(self) != len(space):
            raise SpaceError(f"function has {len(self)} values, space has {len(space)} points")
        return self

    def __add__(self, other):
        return Fn([a + b for a, b in zip(self.values, other.values, strict=True)])

    def scale(self, c):
        return Fn([v * c for v in self.values])

    def support(self):
        return [i for i, v in enumerate(self.values) if v]

    def floats(self):
        return np.array([float(v) for v in self.values])


@dataclass(frozen=True)
class StepFn:
    """Right-continuous-in-reverse step function ``t -> d(t)``.

    ``breakpoints`` are strictly decreasing ``t_1 > ... > t_k > 0`` and
    ``plateaus[j]`` is the value on ``(t_{j+1}, t_j]`` (with ``t_{k+1} = 0``);
    the value above ``t_1`` is zero.  Plateaus are nondecreasing in ``j``.
    """

    breakpoints: tuple = ()
    plateaus: tuple = ()

    def __post_init__(self):
        if len(self.breakpoints) != len(self.plateaus):
            raise ValueError("breakpoints and plateaus differ in length")

    def __len__(self):
        return len(self.breakpoints)

    @property
    def is_zero(self):
        return not self.breakpoints

    def __call__(self, t):
        t = t if isinstance(t, Scalar) else Scalar(t)
        if not t:
            raise ValueError("distribution functions are evaluated at t > 0")
        # find the smallest breakpoint >= t
        val = Scalar(0)
        for b, v in zip(self.breakpoints, self.plateaus):
            if b >= t:
                val = v
            else:
                break
        return val

    def items(self):
        return list(zip(self.breakpoints, self.plateaus))

    def total(self):
        """Value near ``0+`` (the measure of the support)."""
        return self.plateaus[-1] if self.plateaus else Scalar(0)


def distribution_from_pairs(values, masses):
    """Distribution ``t -> sum{mass : value >= t}`` of a weighted multiset."""
    vals, ex1 = unify(values)
    ms, ex2 = unify(masses)
    if len(vals) != len(ms):
        raise SpaceError("values and masses differ in length")
    if ex1 != ex2:
        vals = [ctx.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else v for v in vals]
        ms = [ctx.mpf(m.numerator) / m.denominator if isinstance(m, Fraction) else m for m in ms]
    acc = {}
    for v, m in zip(vals, ms):
        if v > 0:
            acc[v] = acc.get(v, 0) + m
    if not acc:
        return StepFn()
    keys = sorted(acc, reverse=True)
    bps, pls = [], []
    run = 0
    for k in keys:
        run = run + acc[k]
        bps.append(wrap(k))
        pls.append(wrap(run))
    return StepFn(tuple(bps), tuple(pls))


def distribution(f, space):
    """``d_f(t) = mu({x : f(x) >= t})`` as an exact step function."""
    f.check(space)
    return distribution_from_pairs(f.values, space.weights)


def ball(space, center, radius):
    """Open ball ``{y : dist(center, y) < radius}`` as a set of point ids."""
    i = space.index(center)
    r = to_fraction(radius)
    if r <= 0:
        raise SpaceError("radius must be positive")
    row = space.dist[i]
    if space.integral_metric:
        mask = row < math.ceil(r)
    else:
        mask = np.array([x < r for x in row.tolist()])
    return {space.points[j] for j in np.flatnonzero(mask)}


def total_measure(space):
    if len(space) == 0:
        raise SpaceError("empty space")
    return ssum(space.weights)


def support_check(space):
    """Every point carries positive mass, so the support is the whole space."""
    return all(bool(w) for w in space.weights)
