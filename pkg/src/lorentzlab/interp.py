"""Dyadic transforms ``S``, ``T``, the lambda-split and a checker for the
interpolation chain.

``S g(n) = 2^n d_g(2^n)^(1/p)`` over all integers ``n``.  On a finite space
``d_g`` is constant below the least positive value of ``g``, so every
profile is a finite table plus a geometric tail and all infinite sums have
closed forms.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from ._validation import INF, check_p, check_q, fmt_exponent, inv
from .lorentz import lorentz_norm
from .maximal import maximal_fn
from .mms import Fn, Space
from .scalar import Scalar, ctx

__all__ = ["DyadicProfile", "SplitData", "s_transform", "t_transform", "lambda_split",
           "verify_chain", "s_comparability", "box_constant", "chain_exponents"]


def _mp(x):
    if isinstance(x, Scalar):
        return x.as_mpf()
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


def _floor_log2(x: Fraction) -> int:
    """Largest ``n`` with ``2^n <= x`` (``x > 0``)."""
    n = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** n > x:
        n -= 1
    while Fraction(2) ** (n + 1) <= x:
        n += 1
    return n


def _exact_values(f: Fn):
    vals = []
    for v in f.values:
        if not v.is_exact:
            raise ValueError("dyadic profiles need exact function values")
        vals.append(v.as_fraction())
    return vals


class _Seq:
    """Nonnegative sequence on the integers: a finite table plus ``c 2^n`` for ``n <= top``."""

    def __init__(self, table, c=0, top=None):
        self.table = {n: _mp(v) for n, v in table.items()}
        self.c = _mp(c)
        self.top = top if self.c > 0 else None

    def _tail_iter_above(self, a):
        # tail terms exceeding a, from the top down (finitely many when a > 0)
        if self.top is None:
            return
        n = self.top
        while self.c * ctx.mpf(2) ** n > a:
            yield self.c * ctx.mpf(2) ** n
            n -= 1

    def sup(self):
        out = max(self.table.values(), default=ctx.mpf(0))
        if self.top is not None:
            out = max(out, self.c * ctx.mpf(2) ** self.top)
        return out

    def norm(self, q):
        if q == INF:
            return self.sup()
        qm = _mp(q)
        s = ctx.fsum(v ** qm for v in self.table.values())
        if self.top is not None:
            s += (self.c * ctx.mpf(2) ** self.top) ** qm / (1 - ctx.mpf(2) ** (-qm))
        return s ** (1 / qm)

    def count_ge(self, y):
        """Counting-measure distribution ``#{n : s(n) >= y}``, ``y > 0``."""
        y = _mp(y)
        k = sum(1 for v in self.table.values() if v >= y)
        if self.top is not None:
            k += sum(1 for _ in self._tail_iter_above(y))
            n = self.top - sum(1 for _ in self._tail_iter_above(y))
            if self.c * ctx.mpf(2) ** n == y:
                k += 1
        return k

    def int_over(self, a, q):
        """``int_a^inf y^(q-1) d(y) dy``."""
        a, qm = _mp(a), _mp(q)
        vals = [v for v in self.table.values() if v > a] + list(self._tail_iter_above(a))
        return ctx.fsum(v ** qm - a ** qm for v in vals) / qm

    def int_shift(self, a, q):
        """``int_a^inf (y - a)^(q-1) d(y) dy``."""
        a, qm = _mp(a), _mp(q)
        vals = [v for v in self.table.values() if v > a] + list(self._tail_iter_above(a))
        return ctx.fsum((v - a) ** qm for v in vals) / qm

    def int_below(self, a, q):
        """``int_0^a y^(q-1) d(y) dy``."""
        a, qm = _mp(a), _mp(q)
        s = ctx.fsum(min(v, a) ** qm for v in self.table.values())
        if self.top is not None:
            big = sum(1 for _ in self._tail_iter_above(a))
            s += big * a ** qm
            n_star = self.top - big
            s += (self.c * ctx.mpf(2) ** n_star) ** qm / (1 - ctx.mpf(2) ** (-qm))
        return s / qm


@dataclass(frozen=True)
class DyadicProfile:
    """``S g`` stored through the exact masses ``d_g(2^n)`` on ``[n_lo, n_hi]``.

    Below ``n_lo`` the mass equals ``total`` (the measure of the support).
    """

    p: Fraction
    n_lo: int | None
    n_hi: int | None
    masses: tuple = ()
    total: Fraction = Fraction(0)

    @property
    def is_zero(self):
        return self.n_hi is None

    def mass(self, n) -> Fraction:
        if self.is_zero or n > self.n_hi:
            return Fraction(0)
        if n <= self.n_lo:
            return self.total
        return self.masses[n - self.n_lo]

    def __call__(self, n) -> Scalar:
        d = self.mass(n)
        if d == 0:
            return Scalar(0)
        return Scalar(ctx.mpf(2) ** n * _mp(d) ** (1 / _mp(self.p)))

    def indices(self):
        return [] if self.is_zero else list(range(self.n_lo, self.n_hi + 1))

    def exceeds(self, n, lam: Fraction) -> bool:
        """Exact test of ``S g(n) > lam`` for rational ``lam``."""
        d = self.mass(n)
        if d == 0:
            return False
        a, b = self.p.numerator, self.p.denominator
        # 2^n d^(b/a) > lam  <=>  d^b > (lam 2^-n)^a
        return d ** b > (lam / Fraction(2) ** n) ** a

    def seq(self, drop=()):
        """The profile as a ``_Seq``; indices in ``drop`` are zeroed."""
        if self.is_zero:
            return _Seq({})
        drop = set(drop)
        lo = min([self.n_lo] + [n for n in drop])
        table = {n: self(n).as_mpf() for n in range(lo, self.n_hi + 1) if n not in drop}
        c = _mp(self.total) ** (1 / _mp(self.p))
        return _Seq(table, c, lo - 1)

    def only(self, keep):
        return _Seq({n: self(n).as_mpf() for n in keep})

    def norm(self, q):
        return self.seq().norm(check_q(q))

    def to_json(self):
        return {"p": fmt_exponent(self.p), "n_lo": self.n_lo, "n_hi": self.n_hi,
                "masses": [str(m) for m in self.masses], "total": str(self.total)}


def _profile_from_values(vals, weights, p):
    pos = sorted(((v, w) for v, w in zip(vals, weights) if v > 0 and w > 0), reverse=True)
    if not pos:
        return DyadicProfile(p, None, None)
    n_hi = _floor_log2(pos[0][0])
    n_lo = _floor_log2(pos[-1][0])
    masses = []
    acc, k = Fraction(0), 0
    for n in range(n_hi, n_lo - 1, -1):
        t = Fraction(2) ** n
        while k < len(pos) and pos[k][0] >= t:
            acc += pos[k][1]
            k += 1
        masses.append(acc)
    total = acc + sum((w for _, w in pos[k:]), Fraction(0))
    return DyadicProfile(p, n_lo, n_hi, tuple(reversed(masses)), total)


def _weights(space: Space):
    out = []
    for w in space.weights:
        if not w.is_exact:
            raise ValueError("dyadic profiles need exact weights")
        out.append(w.as_fraction())
    return out


def s_transform(f: Fn, space: Space, p) -> DyadicProfile:
    p = check_p(p)
    f.check(space)
    return _profile_from_values(_exact_values(f), _weights(space), p)


def t_transform(f: Fn, space: Space, p) -> DyadicProfile:
    return s_transform(maximal_fn(f, space), space, p)


def box_constant(p, q):
    """Two-sided constant relating ``||g||_{p,q}`` and ``||S g||_q``.

    On ``[2^n, 2^(n+1))`` one has ``S g(n+1)/2 <= t d_g(t)^(1/p) <= 2 S g(n)``;
    integrating against ``dt/t`` puts the ratio in
    ``[(p ln2)^(1/q)/2, 2 (p ln2)^(1/q)]`` (``[1, 2]`` for ``q = inf``).
    """
    p, q = check_p(p), check_q(q)
    if q == INF:
        return ctx.mpf(2)
    k = (_mp(p) * ctx.ln(2)) ** (1 / _mp(q))
    return max(2 * k, 2 / k)


def comparability_bounds(p, q):
    p, q = check_p(p), check_q(q)
    if q == INF:
        return ctx.mpf(1), ctx.mpf(2)
    k = (_mp(p) * ctx.ln(2)) ** (1 / _mp(q))
    return k / 2, 2 * k


def s_comparability(f: Fn, space: Space, p, q):
    """``||f||_{p,q} / ||S f||_q``."""
    p, q = check_p(p), check_q(q)
    prof = s_transform(f, space, p)
    if prof.is_zero:
        raise ValueError("s_comparability is undefined for f = 0")
    return lorentz_norm(f, space, p, q).as_mpf() / prof.norm(q)


@dataclass
class SplitData:
    """Split of ``f`` at height ``lam`` along the dyadic level sets ``E_j = {f >= 2^j}``.

    ``f_0`` keeps ``f`` on ``E_{n_m}`` with ``n_m = min N_lam``; ``f_1 = f - f_0``.
    """

    lam: Fraction
    levels: tuple
    E: dict
    f0: Fn
    f1: Fn
    profile: DyadicProfile
    invariants: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.invariants.values())


def _levels_above(prof: DyadicProfile, lam: Fraction):
    if prof.is_zero:
        return ()
    out = [n for n in prof.indices() if prof.exceeds(n, lam)]
    n = prof.n_lo - 1
    while prof.exceeds(n, lam):
        out.append(n)
        n -= 1
    return tuple(sorted(out, reverse=True))


def lambda_split(f: Fn, space: Space, p, lam, check=True, profile=None) -> SplitData:
    p = check_p(p)
    lam = Fraction(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    vals = _exact_values(f)
    w = _weights(space)
    prof = profile if profile is not None else _profile_from_values(vals, w, p)
    levels = _levels_above(prof, lam)
    E = {}
    for j in levels:
        t = Fraction(2) ** j
        E[j] = frozenset(i for i, v in enumerate(vals) if v >= t)
    if levels:
        keep = E[levels[-1]]
        v0 = [v if i in keep else Fraction(0) for i, v in enumerate(vals)]
    else:
        v0 = [Fraction(0)] * len(vals)
    v1 = [a - b for a, b in zip(vals, v0)]
    sd = SplitData(lam, levels, E, Fn(v0), Fn(v1), prof)
    if check:
        sd.invariants = _split_invariants(sd, vals, w, p)
        if not sd.ok:
            raise AssertionError(f"split invariants failed: {sd.invariants}")
    return sd


def _split_invariants(sd: SplitData, vals, w, p, profile_of=None):
    prof = sd.profile
    if profile_of is None:
        def profile_of(g):
            return _profile_from_values(_exact_values(g), w, p)
    p0, p1 = profile_of(sd.f0), profile_of(sd.f1)
    inv_ = {}
    inv_["levels"] = sd.levels == _levels_above(prof, sd.lam)
    inv_["sum"] = all(a + b >= v for a, b, v in
                      zip(_exact_values(sd.f0), _exact_values(sd.f1), vals))
    inv_["f0_equal_on_levels"] = all(p0.mass(n) == prof.mass(n) for n in sd.levels)
    # the min{lam, S f} bound can only concern f_1 (f_0 equals S f > lam on the levels)
    if prof.is_zero:
        window = []
    else:
        window = range(min([prof.n_lo] + list(sd.levels)) - 2, prof.n_hi + 2)
    ok = all(p1.mass(n) <= prof.mass(n) and not p1.exceeds(n, sd.lam) for n in window)
    # below the window both masses are constant and S decays, so the top of the window decides
    inv_["f1_below_min"] = ok and p1.total <= prof.total
    return inv_


def chain_exponents(q0, r0, q1, r1, theta):
    """``q_theta, r_theta`` and the ``tau, xi`` of the level choice."""
    q0, r0, q1, r1 = (check_q(x) for x in (q0, r0, q1, r1))
    theta = Fraction(theta)
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if not (q0 < q1 and r0 < r1 and q0 <= r0 and q1 <= r1):
        raise ValueError("need q0 < q1, r0 < r1 and q_i <= r_i")
    iq = (1 - theta) * inv(q0) + theta * inv(q1)
    ir = (1 - theta) * inv(r0) + theta * inv(r1)
    q_t, r_t = 1 / iq, 1 / ir
    if r1 == INF:
        tau = None
        xi = Fraction(1) if q1 == INF else q1 / (q1 - q_t)
    else:
        tau = q_t * (r1 / q1 - r0 / q0) / (r1 - r0) if q1 != INF else q_t * (-r0 / q0) / (r1 - r0)
        xi = iq * (inv(r1) - ir) / (ir * (inv(q1) - iq))
    return q_t, r_t, tau, xi


def _rational(x, bits=48):
    """Rational stand-in for a positive mpf (any positive level works in the chain)."""
    m, e = ctx.frexp(x)
    return Fraction(int(ctx.nint(m * 2 ** bits))) * Fraction(2) ** (int(e) - bits)


class _Probe:
    """Cache of ``S g``, ``T g`` and norms for the functions the chain touches."""

    def __init__(self, space, p):
        self.space, self.p = space, p
        self._cache = {}
        self._norms = {}

    def get(self, g: Fn):
        key = tuple(_exact_values(g))
        if key not in self._cache:
            mg = maximal_fn(g, self.space)
            self._cache[key] = (g, mg, s_transform(g, self.space, self.p),
                                s_transform(mg, self.space, self.p))
        return self._cache[key]

    def norm(self, g, q, maximal=False):
        key = (tuple(_exact_values(g)), q, maximal)
        if key not in self._norms:
            g, mg, _, _ = self.get(g)
            self._norms[key] = lorentz_norm(mg if maximal else g, self.space, self.p, q).as_mpf()
        return self._norms[key]

    def ratio(self, g, q, r):
        den = self.norm(g, q)
        return self.norm(g, r, maximal=True) / den if den > 0 else ctx.mpf(0)


def _level_pieces(f: Fn):
    """``f`` restricted to each ``E_j`` and to its complement, over all active levels."""
    vals = _exact_values(f)
    pos = [v for v in vals if v > 0]
    if not pos:
        return []
    out = [f]
    for j in range(_floor_log2(min(pos)), _floor_log2(max(pos)) + 2):
        t = Fraction(2) ** j
        out.append(Fn([v if v >= t else 0 for v in vals]))
        out.append(Fn([v if v < t else 0 for v in vals]))
    return out


def _entry(cid, y, lhs, rhs, tol):
    lhs, rhs = _mp(lhs), _mp(rhs)
    ok = bool(lhs <= rhs + abs(rhs) * tol + ctx.mpf(tol) * 1e-30)
    return {"id": cid, "y": ctx.nstr(_mp(y), 12), "lhs": ctx.nstr(lhs, 15),
            "rhs": ctx.nstr(rhs, 15), "margin": ctx.nstr(rhs - lhs, 6), "pass": ok}


def verify_chain(f: Fn, space: Space, p, q0, q1, r0, r1, theta, y_grid=None, tol=1e-40):
    """Check every displayed inequality of the level-splitting argument for one ``f``.

    Returns a JSON-ready report; ``d2_printed`` uses the printed scaling
    ``y / 2^(1/p)``, ``d2`` the one that follows from sublinearity of ``M``,
    ``y / 2^(1 + 1/p)``.
    """
    p = check_p(p)
    q0, q1, r0, r1 = (check_q(x) for x in (q0, q1, r0, r1))
    q_t, r_t, tau, xi = chain_exponents(q0, r0, q1, r1, theta)
    probe = _probe_for(space, p)
    _, _, prof, tprof = probe.get(f)
    if prof.is_zero:
        raise ValueError("verify_chain needs f != 0")
    Sf, Tf = prof.seq(), tprof.seq()
    pm = _mp(p)
    s2 = ctx.mpf(2) ** (1 / pm)

    pieces = _level_pieces(f)
    c_to = [max(probe.ratio(g, q, r) for g in pieces) for q, r in ((q0, r0), (q1, r1))]
    c_box = max(box_constant(p, x) for x in (q0, q1, r0, r1, q_t, r_t))

    if y_grid is None:
        top = Tf.sup()
        y_grid = [top * ctx.mpf(2) ** (ctx.mpf(1 - k) / 2) for k in range(24)]
    y_grid = [_mp(y) for y in y_grid]
    if not y_grid or any(y <= 0 for y in y_grid):
        raise ValueError("y_grid must be a nonempty list of positive numbers")

    fvals = _exact_values(f)
    norm_t = Sf.norm(q_t)
    if r1 != INF:
        def lam_of(y):
            return 4 * norm_t ** (-_mp(tau) * _mp(xi)) * y ** _mp(xi)
        c_used = None
    elif q1 == INF:
        c_used = 1 / (2 * c_to[1] * c_box ** 2 * s2)

        def lam_of(y):
            return c_used * y
    else:
        scale = norm_t ** (-_mp(q_t) / (_mp(q1) - _mp(q_t)))
        expo = _mp(xi)

        f1_by_level = {}

        def t1_vanishes(c):
            for y in y_grid:
                levels = _levels_above(prof, _rational(c * scale * y ** expo))
                n_m = levels[-1] if levels else None
                if n_m not in f1_by_level:
                    t = None if n_m is None else Fraction(2) ** n_m
                    f1 = Fn([v if t is None or v < t else 0 for v in fvals])
                    f1_by_level[n_m] = probe.get(f1)[3].seq()
                if f1_by_level[n_m].count_ge(y / s2):
                    return False
            return True
        lo, hi = ctx.mpf(-80), ctx.mpf(80)
        for _ in range(40):
            mid = (lo + hi) / 2
            lo, hi = (mid, hi) if t1_vanishes(ctx.mpf(2) ** mid) else (lo, mid)
        c_used = ctx.mpf(2) ** lo

        def lam_of(y):
            return c_used * scale * y ** expo

    checks = []
    for y in y_grid:
        lam = _rational(lam_of(y))
        sd = lambda_split(f, space, p, lam, check=False, profile=prof)
        sd.invariants = _split_invariants(sd, fvals, None, p, lambda g: probe.get(g)[2])
        checks.append({"id": "split", "y": ctx.nstr(y, 12), "lhs": "", "rhs": "",
                       "margin": "", "pass": sd.ok})
        checks += _checks_at(y, lam, sd, Sf, Tf, probe, p, (q0, q1), (r0, r1), c_box, c_to, tol)

    failed = sorted({c["id"] for c in checks if not c["pass"]})
    return {"p": fmt_exponent(p), "q0": fmt_exponent(q0), "q1": fmt_exponent(q1),
            "r0": fmt_exponent(r0), "r1": fmt_exponent(r1), "theta": str(Fraction(theta)),
            "q_theta": fmt_exponent(q_t), "r_theta": fmt_exponent(r_t),
            "tau": None if tau is None else str(tau), "xi": str(xi),
            "C_box": ctx.nstr(c_box, 10), "C_to": [ctx.nstr(c, 10) for c in c_to],
            "c": None if c_used is None else ctx.nstr(c_used, 10),
            "checks": checks, "failed": failed, "all_pass": not failed}


_PROBES = {}


def _probe_for(space, p):
    key = (id(space), p)
    if key not in _PROBES or _PROBES[key].space is not space:
        if len(_PROBES) > 8:
            _PROBES.clear()
        _PROBES[key] = _Probe(space, p)
    return _PROBES[key]


def _checks_at(y, lam, sd, Sf, Tf, probe, p, qs, rs, c_box, c_to, tol):
    pm = _mp(p)
    s2 = ctx.mpf(2) ** (1 / pm)
    lm = _mp(lam)
    parts = [_Seq({}), _Seq({})]
    S_i, T_i = [], []
    for g in (sd.f0, sd.f1):
        _, _, sp, tp = probe.get(g)
        S_i.append(sp.seq())
        T_i.append(tp.seq())
    parts[0] = sd.profile.only(sd.levels)
    parts[1] = sd.profile.seq(drop=sd.levels)
    out = []
    for i in (0, 1):
        q = qs[i]
        if q == INF:
            out.append(_entry(f"geom{i}", y, S_i[i].norm(INF), parts[i].norm(INF), tol))
        else:
            qm = _mp(q)
            fac = (1 / (1 - ctx.mpf(2) ** (-qm / pm))) ** (1 / qm)
            out.append(_entry(f"geom{i}", y, S_i[i].norm(q), fac * parts[i].norm(q), tol))
    q0m = _mp(qs[0])
    lhs = parts[0].norm(qs[0]) ** q0m / q0m
    mid = 2 ** q0m / (2 ** q0m - 1) * Sf.int_over(lm / 2, qs[0])
    out.append(_entry("d0a", y, lhs, mid, tol))
    out.append(_entry("d0b", y, mid, 2 ** q0m * Sf.int_shift(lm / 4, qs[0]), tol))
    if qs[1] != INF:
        q1m = _mp(qs[1])
        lhs = parts[1].norm(qs[1]) ** q1m / q1m
        mid = Sf.int_below(lm, qs[1])
        out.append(_entry("d1a", y, lhs, mid, tol))
        out.append(_entry("d1b", y, mid, 4 ** q1m * Sf.int_below(lm / 4, qs[1]), tol))
    lhs = Tf.count_ge(y)
    out.append(_entry("d2_printed", y, lhs, T_i[0].count_ge(y / s2) + T_i[1].count_ge(y / s2), tol))
    out.append(_entry("d2", y, lhs, T_i[0].count_ge(y / (2 * s2)) + T_i[1].count_ge(y / (2 * s2)),
                      tol))
    for i in (0, 1):
        r = rs[i]
        cnt = T_i[i].count_ge(y / s2)
        if r == INF:
            if i == 1:
                out.append(_entry("t1_zero", y, cnt, 0, tol))
            continue
        rm = _mp(r)
        cheb = 2 ** (rm / pm) * T_i[i].norm(r) ** rm / y ** rm
        out.append(_entry(f"d3a_{i}", y, cnt, cheb, tol))
        bound = (s2 * c_box ** 2 * c_to[i]) ** rm * S_i[i].norm(qs[i]) ** rm / y ** rm
        out.append(_entry(f"d3b_{i}", y, cheb, bound, tol))
    return out


def report_json(report) -> str:
    return json.dumps(report, indent=1, sort_keys=True)
