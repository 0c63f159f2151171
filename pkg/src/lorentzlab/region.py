"""Boundedness regions ``Omega`` in the ``(1/q, 1/r)`` square: target shapes,
separating lines, grid scans and the structural checks every region obeys."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np
from sklearn.base import BaseEstimator

from .composite import Lemma5Params, Surd
from .scalar import to_fraction

__all__ = [
    "RegionSpec", "RegionSpecError", "RegionMap", "separating_line", "check_line",
    "enumerate_outside", "finite_subcover", "cover_line", "scan", "axioms_check", "emit",
    "RegionScanner", "BOUNDED", "UNBOUNDED", "UNKNOWN", "VARIANTS",
]

BOUNDED, UNBOUNDED, UNKNOWN = "BOUNDED", "UNBOUNDED", "BAND/UNKNOWN"
VARIANTS = ("Y-closed", "Z-open")


class RegionSpecError(ValueError):
    pass


def _pt(x):
    return tuple(to_fraction(v) for v in x)


@dataclass(frozen=True)
class RegionSpec:
    """Target region described by ``delta``, a concave piecewise-linear ``F`` and an optional jump.

    ``breakpoints`` run from ``u = delta`` to ``u = 1``.  For ``closed=False``
    the domain is ``(delta, 1]`` and the first breakpoint carries the limit
    value at ``delta``.  ``omega`` (closed domains only) is ``F(delta)`` when
    it lies strictly below that limit.
    """

    delta: Fraction
    breakpoints: tuple
    closed: bool = True
    omega: Fraction | None = None

    def __post_init__(self):
        delta = to_fraction(self.delta)
        bps = tuple(_pt(b) for b in self.breakpoints)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "breakpoints", bps)
        if self.omega is not None:
            object.__setattr__(self, "omega", to_fraction(self.omega))
        self._validate()

    def _validate(self):
        d, bps = self.delta, self.breakpoints
        if not 0 <= d <= 1:
            raise RegionSpecError("delta must lie in [0, 1]")
        if not bps:
            raise RegionSpecError("F needs at least one breakpoint")
        if bps[0][0] != d or bps[-1][0] != 1:
            raise RegionSpecError("breakpoints must start at delta and end at 1")
        if d == 1 and not self.closed:
            raise RegionSpecError("the half-open domain (1, 1] is empty")
        us = [u for u, _ in bps]
        if any(b <= a for a, b in zip(us, us[1:])):
            raise RegionSpecError("breakpoint abscissae must be strictly increasing")
        for u, v in bps:
            if not 0 <= v <= 1:
                raise RegionSpecError(f"F({u}) = {v} lies outside [0, 1]")
            if v > u:
                raise RegionSpecError(f"F({u}) = {v} exceeds {u}")
        slopes = self.slopes()
        if any(s < 0 for s in slopes):
            raise RegionSpecError("F must be non-decreasing")
        for i in range(len(slopes) - 1):
            if slopes[i + 1] > slopes[i]:
                trip = bps[i], bps[i + 1], bps[i + 2]
                raise RegionSpecError(f"F is not concave at breakpoints {_fmt_triple(trip)}")
        if self.omega is not None:
            if not self.closed:
                raise RegionSpecError("a jump value needs the closed domain")
            if not (0 <= self.omega < d and self.omega < bps[0][1]):
                raise RegionSpecError("omega must lie in [0, delta) and below the limit of F at delta")

    # geometry
    def slopes(self):
        b = self.breakpoints
        return [(b[i + 1][1] - b[i][1]) / (b[i + 1][0] - b[i][0]) for i in range(len(b) - 1)]

    def segments(self):
        b = self.breakpoints
        return [(b[i][0], b[i][1], b[i + 1][0], b[i + 1][1]) for i in range(len(b) - 1)]

    def F(self, u):
        """Continuous modification of ``F`` on ``[delta, 1]``."""
        u = to_fraction(u)
        if not self.delta <= u <= 1:
            raise ValueError(f"{u} lies outside [delta, 1]")
        b = self.breakpoints
        for i in range(len(b) - 1):
            (u0, v0), (u1, v1) = b[i], b[i + 1]
            if u0 <= u <= u1:
                return v0 + (v1 - v0) * (u - u0) / (u1 - u0)
        return b[-1][1]

    @property
    def has_jump(self):
        return self.omega is not None

    def in_region(self, u, w, variant="Y-closed"):
        """Whether ``(u, w)`` belongs to the target set of the chosen space."""
        u, w = to_fraction(u), to_fraction(w)
        if u < self.delta:
            return False
        strict = variant == "Z-open"
        if u == self.delta:
            if not self.closed:
                return False
            top = self.omega if self.has_jump else self.F(u)
        else:
            top = self.F(u)
        return w < top if strict else w <= top

    def outside_closure(self, u, w):
        """Outside ``{u >= delta, w <= F~(u)}`` (the continuous, closed modification)."""
        u, w = to_fraction(u), to_fraction(w)
        return u < self.delta or w > self.F(u)

    def on_graph(self, u, w):
        u, w = to_fraction(u), to_fraction(w)
        return self.delta <= u <= 1 and w == self.F(u)

    def region_max(self, a, b):
        """``max(a F(u) - b u)`` over ``u in [delta, 1]`` (attained at a breakpoint)."""
        return max(a * v - b * u for u, v in self.breakpoints)

    # serialisation
    def to_json(self):
        return {"delta": str(self.delta), "closed": self.closed,
                "omega": None if self.omega is None else str(self.omega),
                "breakpoints": [[str(u), str(v)] for u, v in self.breakpoints]}

    @classmethod
    def from_json(cls, obj):
        return cls(to_fraction(obj["delta"]), [(to_fraction(u), to_fraction(v)) for u, v in obj["breakpoints"]],
                   bool(obj.get("closed", True)),
                   None if obj.get("omega") is None else to_fraction(obj["omega"]))

    @classmethod
    def identity(cls, delta=0):
        delta = to_fraction(delta)
        bps = [(delta, delta), (1, 1)] if delta < 1 else [(1, 1)]
        return cls(delta, bps)


def _fmt_triple(trip):
    return ", ".join(f"({u}, {v})" for u, v in trip)


# ---------------------------------------------------------------------------
# separating lines


def _candidate_slopes(spec: RegionSpec):
    cands = set(spec.slopes()) | {Fraction(0)}
    cands |= {Fraction(2) ** j for j in range(-12, 21)}
    return sorted(cands)


def separating_line(spec: RegionSpec, P, p=2, R=2):
    """Line ``a w - b u = gamma`` through ``P`` with the widest margin to the region.

    ``a, b`` are coprime with ``b/a`` taken from the segment slopes of ``F``
    and powers of two; ``eps`` is the largest rational (up to a 1e-12
    rounding of ``d``) such that every point with ``a w - b u > gamma - 3 eps d``
    lies outside the region.
    """
    u, w = _pt(P)
    if not spec.outside_closure(u, w):
        if spec.on_graph(u, w):
            raise ValueError("no positive margin: the point lies on the graph of F")
        raise ValueError("the point lies inside the region")
    best = None
    for sigma in _candidate_slopes(spec):
        a, b = sigma.denominator, sigma.numerator
        gamma = a * w - b * u
        gap = gamma - spec.region_max(a, b)
        if gap <= 0:
            continue
        score = gap * gap / (a * a + b * b)
        if best is None or score > best[0]:
            best = (score, a, b, gamma, gap)
    if best is None:
        raise ValueError("no positive margin for any candidate direction")
    _, a, b, gamma, gap = best
    _, d_hi = Surd.sqrt(a * a + b * b).bounds()
    return Lemma5Params(p, Surd(gamma), a, b, R, gap / (3 * d_hi))


def check_line(spec: RegionSpec, lp: Lemma5Params, P):
    """Replay both line conditions exactly: the line passes through ``P``, and
    ``a w - b u > gamma - 3 eps d`` forces ``(u, w)`` out of the region."""
    u, w = _pt(P)
    through = lp.gamma == Surd(lp.a * w - lp.b * u)
    margin = lp.gamma - lp.eps_d * 3 - Surd(spec.region_max(lp.a, lp.b))
    return {"through_point": through, "margin_ok": margin.sign() >= 0}


def enumerate_outside(spec: RegionSpec, cap):
    """Rational points of ``[0,1]^2`` with denominators ``<= cap`` outside the closed region."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    pts = {}
    for den in range(1, cap + 1):
        for num in range(den + 1):
            if gcd(num, den) == 1 or (num == 0 and den == 1):
                pts.setdefault(Fraction(num, den), den)
    coords = sorted(pts)
    out = []
    for u in coords:
        for w in coords:
            if spec.outside_closure(u, w):
                out.append((max(u.denominator, w.denominator), u, w))
    out.sort()
    return [(u, w) for _, u, w in out]


# ---------------------------------------------------------------------------
# covering lines for the strict-inequality construction


def cover_line(spec: RegionSpec, seg_index, n, min_d=8):
    """Line family member for segment ``seg_index`` at level ``n``.

    Direction follows the segment (scaled so ``d >= min_d``) and
    ``gamma = a c + 3 d / (2n)`` where ``w = s u + c`` extends the segment;
    every point of the segment then sits in the middle of the band
    ``(gamma - 2d/n, gamma - d/n)``.
    """
    u0, v0, u1, v1 = spec.segments()[seg_index]
    s = (v1 - v0) / (u1 - u0)
    a, b = s.denominator, s.numerator
    k = 1
    while (k * a) ** 2 + (k * b) ** 2 < min_d ** 2:
        k += 1
    a, b = k * a, k * b
    c = v0 - s * u0
    d = Surd.sqrt(a * a + b * b)
    gamma = Surd(a * c) + d * Fraction(3, 2 * n)
    return a, b, gamma, d


def _band_intervals(spec, a, b, lo: Surd, hi: Surd):
    """Rational inner approximations of ``{v : lo < a F(v) - b v < hi}``."""
    out = []
    for u0, v0, u1, v1 in spec.segments():
        g0, g1 = a * v0 - b * u0, a * v1 - b * u1
        if g0 == g1:
            if lo < Surd(g0) < hi:
                out.append((u0, u1))
            continue
        # g is linear on [u0, u1]; solve g(v) = level for each bound
        def where(level):
            t_lo, t_hi = ((level - Surd(g0)) * (1 / (g1 - g0))).bounds()
            return u0 + (u1 - u0) * t_lo, u0 + (u1 - u0) * t_hi
        a_lo, a_hi = where(lo)
        b_lo, b_hi = where(hi)
        if g1 > g0:
            left, right = a_hi, b_lo
        else:
            left, right = b_hi, a_lo
        left, right = max(left, u0), min(right, u1)
        if left < right:
            out.append((left, right))
    return out


def finite_subcover(spec: RegionSpec, n):
    """Greedy choice of ``U_n``: one candidate ``u`` per segment (its midpoint)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if spec.delta == 1 or not spec.segments():
        return [Fraction(1)]
    cands = []
    for i, (u0, _, u1, _) in enumerate(spec.segments()):
        a, b, gamma, d = cover_line(spec, i, n)
        ivs = _band_intervals(spec, a, b, gamma - d * Fraction(2, n), gamma - d * Fraction(1, n))
        # the own segment is always inside the band, closed endpoints included
        ivs.append((u0, u1))
        cands.append(((u0 + u1) / 2, ivs))
    reach, chosen = spec.delta, []
    while reach < 1:
        best = None
        for u, ivs in cands:
            for lo, hi in ivs:
                if lo <= reach < hi and (best is None or hi > best[1]):
                    best = (u, hi)
        if best is None:
            raise RuntimeError(f"cover stalls at {reach}")
        if best[0] not in chosen:
            chosen.append(best[0])
        reach = best[1]
    return sorted(chosen)


# ---------------------------------------------------------------------------
# maps


@dataclass
class RegionMap:
    grid: int
    variant: str
    cells: dict = field(default_factory=dict)  # (i, j) -> class, with u = i/grid, w = j/grid
    depth: int = 0
    schedule: tuple = ()
    provenance: str = "model"
    spec: RegionSpec | None = None
    meta: dict = field(default_factory=dict)

    def coords(self, i, j):
        return Fraction(i, self.grid), Fraction(j, self.grid)

    def classes(self):
        return {c: sum(1 for v in self.cells.values() if v == c) for c in (BOUNDED, UNBOUNDED, UNKNOWN)}

    def to_json(self):
        return {
            "grid": self.grid, "variant": self.variant, "depth": self.depth,
            "schedule": list(self.schedule), "provenance": self.provenance,
            "spec": None if self.spec is None else self.spec.to_json(),
            "meta": self.meta,
            "cells": [{"u": str(Fraction(i, self.grid)), "w": str(Fraction(j, self.grid)), "class": c}
                      for (i, j), c in sorted(self.cells.items())],
        }


def scan(spec: RegionSpec, variant="Y-closed", grid=16, depth=3, **kw):
    """Model-level classification of the grid points ``(i/grid, j/grid)``."""
    from ._scan import run_scan
    return run_scan(spec, variant, grid, depth, **kw)


def axioms_check(rmap: RegionMap):
    """Violations of upward closure, the diagonal constraint and convexity."""
    report = []
    G = rmap.grid
    if G == 0 or not rmap.cells:
        return report
    cls = np.full((G + 1, G + 1), "", dtype=object)
    for (i, j), c in rmap.cells.items():
        cls[i, j] = c
    bounded = np.argwhere(cls == BOUNDED)
    for i, j in bounded.tolist():
        if j > i:
            report.append({"axiom": "diagonal", "cell": (i, j)})
        # bounded at (u, w) => bounded on [u, 1] x [0, w]
        blk = cls[i:, :j + 1]
        bad = np.argwhere((blk != BOUNDED) & (blk != ""))
        if bad.size:
            di, dj = bad[0].tolist()
            report.append({"axiom": "upward-closure", "cell": (i, j), "witness": (i + di, dj)})
    pts = [tuple(x) for x in bounded.tolist()]
    arr = np.array(pts) if pts else np.zeros((0, 2), dtype=int)
    for k, (i, j) in enumerate(pts):
        other = arr[k + 1:]
        if not len(other):
            break
        si, sj = other[:, 0] + i, other[:, 1] + j
        ok = (si % 2 == 0) & (sj % 2 == 0)
        for (mi, mj), (oi, oj) in zip(np.stack([si[ok] // 2, sj[ok] // 2], axis=1).tolist(), other[ok].tolist()):
            if cls[mi, mj] == UNBOUNDED:
                report.append({"axiom": "convexity", "cells": ((i, j), (oi, oj)), "midpoint": (mi, mj)})
    return report


# ---------------------------------------------------------------------------
# output


def emit(rmap: RegionMap, fmt="csv"):
    """Deterministic CSV, SVG or JSON bytes for a map."""
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["u", "w", "class", "provenance", "depth"])
        for (i, j), c in sorted(rmap.cells.items()):
            u, w = rmap.coords(i, j)
            wr.writerow([str(u), str(w), c, rmap.provenance, rmap.depth])
        return buf.getvalue().encode()
    if fmt == "json":
        return (json.dumps(rmap.to_json(), sort_keys=True, indent=1) + "\n").encode()
    if fmt == "svg":
        from ._render import render_svg
        return render_svg(rmap).encode()
    raise ValueError(f"unsupported format {fmt!r}; use csv, svg or json")


class RegionScanner(BaseEstimator):
    """sklearn-style wrapper: ``fit(spec)`` scans, ``predict(points)`` looks cells up."""

    def __init__(self, variant="Y-closed", grid=16, depth=3):
        self.variant = variant
        self.grid = grid
        self.depth = depth

    def fit(self, X, y=None):
        spec = X if isinstance(X, RegionSpec) else RegionSpec.from_json(X)
        self.map_ = scan(spec, self.variant, self.grid, self.depth)
        self.violations_ = axioms_check(self.map_)
        return self

    def predict(self, X):
        out = []
        for u, w in X:
            i, j = to_fraction(u) * self.grid, to_fraction(w) * self.grid
            if i.denominator != 1 or j.denominator != 1:
                raise ValueError(f"({u}, {w}) is not a grid point")
            out.append(self.map_.cells[(int(i), int(j))])
        return np.array(out, dtype=object)
