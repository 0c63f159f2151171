"""Model-level grid scan.

Every composite family contributes the constant-free magnitude
``1 + R^(k (x - gamma + eps d) + 2 eps d)`` of its ``k``-th component at a
point with ``x = a w - b u``; a family diverges there exactly when
``x - gamma + eps d > 0``.  Magnitudes are tracked as base-2 logarithms.
"""
from __future__ import annotations

import math
from fractions import Fraction
from math import isqrt

import numpy as np

from .composite import Surd
from .region import (BOUNDED, UNBOUNDED, UNKNOWN, VARIANTS, RegionMap, RegionSpec, cover_line,
                     separating_line)

DEFAULT_BASE = {"Y-closed": 16, "Z-open": 8}
THRESHOLD = 1e6


def _log2_1p(E):
    """``log2(1 + 2^E)`` without overflow."""
    if E > 60:
        return E
    return math.log2(1 + 2.0 ** E)


def _ceil(x: Fraction):
    return -((-x.numerator) // x.denominator)


def _least_n_sq_above(X: Fraction, strict):
    """Smallest positive integer ``n`` with ``n^2 > X`` (strict) or ``n^2 >= X``."""
    if X < 0:
        return 1
    c = (X.numerator // X.denominator) + 1 if strict else _ceil(X)
    return max(1, isqrt(max(c - 1, 0)) + 1) if c > 0 else 1


class _LineFamily:
    """Separating-line family (fixed ``R``), present at every depth."""

    def __init__(self, lp):
        self.a, self.b = lp.a, lp.b
        self.gamma, self.ed = lp.gamma, lp.eps_d
        self.log2R = math.log2(lp.R)
        self.edf = float(self.ed)

    def evaluate(self, u, w, schedule):
        x = Surd(self.a * w - self.b * u)
        s = x - self.gamma + self.ed
        bounded = (x - self.gamma + self.ed * 3).sign() <= 0
        pos = s.sign() > 0
        sf = float(s)
        if pos:
            vals = [_log2_1p(self.log2R * (K * sf + 2 * self.edf)) for K in schedule]
        else:
            vals = [_log2_1p(self.log2R * (sf + 2 * self.edf))] * len(schedule)
        return vals, pos, bounded


class _CoverFamily:
    """Levels ``n = 1, 2, ...`` of the covering line of one segment (``R = n^n``, ``eps = 1/n``)."""

    def __init__(self, spec, seg_index):
        a, b, gamma, d = cover_line(spec, seg_index, 1)
        self.a, self.b = a, b
        self.d2 = a * a + b * b
        self.df = math.sqrt(self.d2)
        u0, v0, u1, v1 = spec.segments()[seg_index]
        s = (v1 - v0) / (u1 - u0)
        self.ac = a * (v0 - s * u0)

    def evaluate(self, u, w, schedule):
        e = self.a * w - self.b * u - self.ac
        N = schedule[-1]
        prev = schedule[-2] if len(schedule) > 1 else 0
        # s_n = e - d/(2n) > 0  <=>  e > 0 and n^2 > d^2 / (4 e^2)
        n_pos = _least_n_sq_above(Fraction(self.d2) / (4 * e * e), strict=True) if e > 0 else None
        pos = n_pos is not None and n_pos <= N
        # bounded regime at level n  <=>  e <= -3d/(2n)  <=>  e < 0 and n^2 >= 9 d^2 / (4 e^2)
        if e < 0:
            n_b = _least_n_sq_above(Fraction(9 * self.d2) / (4 * e * e), strict=False)
            bounded = n_b <= prev + 1
        else:
            bounded = False
        ef = float(e)
        n = np.arange(1, N + 1, dtype=float)
        lr = n * np.log2(n)
        s_n = ef - self.df / (2 * n)
        base = lr * (s_n + 2 * self.df / n)
        vals = []
        for K in schedule:
            m = int(K) if K <= N else N
            sl = slice(0, m)
            grow = lr[sl] * (K * s_n[sl] + 2 * self.df / n[sl])
            use = np.where((n[sl] >= (n_pos or N + 1)), grow, base[sl])
            vals.append(_log2_1p(float(use.max())))
        return vals, pos, bounded


class _Lemma6Family:
    """``a_n = n``, ``b_n = n^2``, ``R = n^n`` with ``gamma_n`` pinned at ``(delta, omega)``."""

    def __init__(self, delta, omega, strict, eps_rule):
        self.delta, self.omega, self.strict = delta, omega, strict
        self.rule = eps_rule

    def _eps_d_sq(self, n):
        # (eps_n d_n)^2 with d_n^2 = n^2 (1 + n^2)
        eps = Fraction(1, 3 * n) if self.rule == "paper" else Fraction(2, 3 * n * n)
        return eps * eps * n * n * (1 + n * n)

    def evaluate(self, u, w, schedule):
        N = schedule[-1]
        prev = schedule[-2] if len(schedule) > 1 else 0
        n = np.arange(1, N + 1, dtype=float)
        A, B = float(w - self.omega), float(u - self.delta)
        e = n * A - n * n * B + (1.0 if self.strict else 0.0)
        if self.rule == "paper":
            ed = np.sqrt(1 + n * n) / 3
        else:
            ed = 2 * np.sqrt(1 + n * n) / (3 * n)
        s = e - 2 * ed
        pos_mask = s > 0
        # settle near-ties exactly
        for k in np.flatnonzero(np.abs(s) < 1e-9).tolist():
            nn = k + 1
            ee = nn * (w - self.omega) - nn * nn * (u - self.delta) + (1 if self.strict else 0)
            pos_mask[k] = ee > 0 and ee * ee > 4 * self._eps_d_sq(nn)
        e_exact_le0 = e <= 0
        for k in np.flatnonzero(np.abs(e) < 1e-9).tolist():
            nn = k + 1
            e_exact_le0[k] = nn * (w - self.omega) - nn * nn * (u - self.delta) + (1 if self.strict else 0) <= 0
        pos = bool(pos_mask.any())
        bounded = bool(e_exact_le0[prev:].all())
        lr = n * np.log2(n)
        vals = []
        for K in schedule:
            m = min(int(K), N)
            sl = slice(0, m)
            expo = np.where(pos_mask[sl], lr[sl] * (K * s[sl] + 2 * ed[sl]), lr[sl] * e[sl])
            vals.append(_log2_1p(float(expo.max())))
        return vals, pos, bounded


def _families(spec: RegionSpec, variant, grid, eps_rule, p):
    fams = []
    G = grid
    for i in range(G + 1):
        for j in range(G + 1):
            u, w = Fraction(i, G), Fraction(j, G)
            if spec.outside_closure(u, w):
                fams.append(_LineFamily(separating_line(spec, (u, w), p=p, R=2)))
    n_lines = len(fams)
    if variant == "Z-open":
        fams += [_CoverFamily(spec, k) for k in range(len(spec.segments()))]
    strict = variant == "Z-open" or not spec.closed
    if spec.has_jump:
        fams.append(_Lemma6Family(spec.delta, spec.omega, variant == "Z-open", eps_rule))
    elif not spec.closed:
        fams.append(_Lemma6Family(spec.delta, Fraction(0), True, eps_rule))
    elif spec.delta == 1:
        fams.append(_Lemma6Family(Fraction(1), spec.breakpoints[-1][1], strict, eps_rule))
    return fams, n_lines


def run_scan(spec: RegionSpec, variant="Y-closed", grid=16, depth=3, base=None,
             threshold=THRESHOLD, eps_rule="repaired", p=2):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if grid < 1 or depth < 1:
        raise ValueError("grid and depth must be positive")
    base = base or DEFAULT_BASE[variant]
    schedule = tuple(base ** j for j in range(1, depth + 1))
    fams, n_lines = _families(spec, variant, grid, eps_rule, p)
    lim = math.log2(threshold)
    tail = min(3, depth)
    cells = {}
    for i in range(grid + 1):
        for j in range(grid + 1):
            u, w = Fraction(i, grid), Fraction(j, grid)
            pos, bounded, diverging = False, True, False
            for fam in fams:
                v, fpos, fb = fam.evaluate(u, w, schedule)
                pos |= fpos
                bounded &= fb
                last = v[-tail:]
                if v[-1] > lim and all(b > a for a, b in zip(last, last[1:])):
                    diverging = True
            if variant == "Y-closed" and spec.in_region(u, w, variant) and spec.on_graph(u, w):
                c = UNKNOWN
            elif bounded and not pos:
                c = BOUNDED
            elif diverging:
                c = UNBOUNDED
            else:
                c = UNKNOWN
            cells[(i, j)] = c
    meta = {"threshold": threshold, "eps_rule": eps_rule, "base": base,
            "line_families": n_lines, "families": len(fams)}
    return RegionMap(grid, variant, cells, depth, schedule, "model", spec, meta)
