"""Lorentz quasi-norms computed in closed form from step distributions."""
from __future__ import annotations

from fractions import Fraction

from ._validation import INF, check_p, check_q, check_random_state
from .mms import Fn, SpaceError, Space, StepFn, distribution, distribution_from_pairs, unify, wrap
from .scalar import Scalar, ctx, ssum

__all__ = [
    "lorentz_norm", "lorentz_norm_of", "lorentz_norm_pairs", "lebesgue_norm",
    "indicator_norm", "avg_fn", "stacking_check", "block_comparability",
    "stacking_bound", "empirical_constant_probes", "random_space", "random_fn",
]


def _mp(x):
    if isinstance(x, Scalar):
        return x.as_mpf()
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


def lorentz_norm_of(d: StepFn, p, q):
    """Quasi-norm ``||f||_{p,q}`` of any function whose distribution is ``d``.

    The integrand ``t^(q-1) d(t)^(q/p)`` is a power of ``t`` on each plateau,
    so the integral is a finite sum of power differences.
    """
    p = check_p(p)
    q = check_q(q)
    if d.is_zero:
        return Scalar(0)
    ts = [_mp(t) for t in d.breakpoints]
    ds = [_mp(v) for v in d.plateaus]
    pm = _mp(p)
    if q == INF:
        best = max(t * v ** (1 / pm) for t, v in zip(ts, ds))
        return wrap(best)
    qm = _mp(q)
    terms = []
    for j, (t, v) in enumerate(zip(ts, ds)):
        t_next = ts[j + 1] if j + 1 < len(ts) else ctx.mpf(0)
        terms.append((t ** qm - t_next ** qm) * v ** (qm / pm))
    total = ctx.fsum(terms) * pm / qm
    return wrap(total ** (1 / qm))


def lorentz_norm(f: Fn, space: Space, p, q):
    return lorentz_norm_of(distribution(f, space), p, q)


def lorentz_norm_pairs(values, masses, p, q):
    return lorentz_norm_of(distribution_from_pairs(values, masses), p, q)


def lebesgue_norm(f: Fn, space: Space, p):
    """Classical ``(sum f^p mu)^(1/p)``."""
    p = check_p(p)
    f.check(space)
    vals = [_mp(v) for v in f.values]
    ws = [_mp(w) for w in space.weights]
    pm = _mp(p)
    s = ctx.fsum(v ** pm * w for v, w in zip(vals, ws) if v > 0)
    return wrap(s ** (1 / pm)) if s > 0 else Scalar(0)


def indicator_norm(measure, p, q):
    """Closed form ``(p/q)^(1/q) mu(E)^(1/p)`` (``mu(E)^(1/p)`` when ``q = inf``)."""
    p = check_p(p)
    q = check_q(q)
    m = Scalar(measure)
    base = m ** (1 / Fraction(p))
    if q == INF:
        return base
    return base * (Scalar(Fraction(p) / Fraction(q)) ** (1 / Fraction(q)))


def avg_fn(f: Fn, space: Space):
    """Constant function equal to the mu-average of ``f``."""
    f.check(space)
    tot = ssum(space.weights)
    mass = ssum(v * w for v, w in zip(f.values, space.weights))
    return Fn([mass / tot] * len(space))


def _supports(fs, space):
    sets = [set(f.check(space).support()) for f in fs]
    seen = set()
    for s in sets:
        if seen & s:
            raise SpaceError("functions must have pairwise disjoint supports")
        seen |= s
    return sets


def stacking_check(fs, space):
    """Lemma-1 stacking: each later plateau dominates the mass of earlier supports."""
    sets = _supports(fs, space)
    prior = Scalar(0)
    for n, f in enumerate(fs):
        if n > 0:
            d = distribution(f, space)
            if any(v < prior for v in d.plateaus):
                return False
        prior = prior + ssum(space.weights[i] for i in sets[n])
    return True


def stacking_bound(p, q):
    """``2^(1/p) (1 - 2^(-q/p))^(-1/q)``; ``2^(1/p)`` when ``q = inf``."""
    p = check_p(p)
    q = check_q(q)
    pm = _mp(p)
    if q == INF:
        return float(2 ** (1 / pm))
    qm = _mp(q)
    return float(2 ** (1 / pm) * (1 - 2 ** (-qm / pm)) ** (-1 / qm))


def block_comparability(fs, space, p, q):
    """``(||sum f_n|| / agg, agg / ||sum f_n||)`` with ``agg`` the l^q aggregate."""
    if not stacking_check(fs, space):
        raise SpaceError("stacking condition violated")
    q = check_q(q)
    total = fs[0]
    for f in fs[1:]:
        total = total + f
    whole = lorentz_norm(total, space, p, q).as_mpf()
    parts = [lorentz_norm(f, space, p, q).as_mpf() for f in fs]
    if q == INF:
        agg = max(parts)
    else:
        qm = _mp(q)
        agg = ctx.fsum(x ** qm for x in parts) ** (1 / qm)
    if agg == 0:
        raise SpaceError("all blocks vanish")
    return float(whole / agg), float(agg / whole)


def random_space(rng, n, max_weight=64, rational_dist=False):
    """Random finite space; distances in [1, 2] so the metric axioms hold."""
    rng = check_random_state(rng)
    if rational_dist:
        den = 12
        raw = rng.integers(den, 2 * den + 1, size=(n, n))
        dist = [[Fraction(0) if i == j else Fraction(int(raw[min(i, j), max(i, j)]), den)
                 for j in range(n)] for i in range(n)]
    else:
        raw = rng.integers(1, 3, size=(n, n))
        dist = [[0 if i == j else int(raw[min(i, j), max(i, j)]) for j in range(n)] for i in range(n)]
    weights = [int(w) for w in rng.integers(1, max_weight + 1, size=n)]
    return Space.build(range(n), dist, weights)


def random_fn(rng, space, den=16, zero_prob=0.25):
    rng = check_random_state(rng)
    n = len(space)
    vals = rng.integers(1, 4 * den + 1, size=n)
    zero = rng.random(n) < zero_prob
    return Fn([0 if z else Fraction(int(v), den) for v, z in zip(vals, zero)])


def empirical_constant_probes(sampler, p, q, r, trials=100, seed=0, n0=3):
    """Observed suprema of the Fact-1/2/3 ratios over random spaces and functions.

    ``sampler(rng)`` returns a Space.  Results are diagnostics, not bounds.
    """
    p = check_p(p)
    q = check_q(q)
    r = check_q(r, "r")
    if q != INF and (r != INF and r < q):
        raise ValueError("embedding probe needs q <= r")
    if q == INF and r != INF:
        raise ValueError("embedding probe needs q <= r")
    rng = check_random_state(seed)
    tri = avg = emb = 0.0
    for _ in range(trials):
        space = sampler(rng)
        fs = [random_fn(rng, space) for _ in range(n0)]
        total = fs[0]
        for f in fs[1:]:
            total = total + f
        s = sum(float(lorentz_norm(f, space, p, q)) for f in fs)
        if s > 0:
            tri = max(tri, float(lorentz_norm(total, space, p, q)) / s)
        f = fs[0]
        nf = float(lorentz_norm(f, space, p, q))
        if nf > 0:
            avg = max(avg, float(lorentz_norm(avg_fn(f, space), space, p, q)) / nf)
            emb = max(emb, float(lorentz_norm(f, space, p, r)) / nf)
    return {"triangle": tri, "avg": avg, "embedding": emb}
