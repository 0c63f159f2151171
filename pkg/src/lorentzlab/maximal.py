"""Centered Hardy-Littlewood maximal operator on finite spaces."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .mms import Fn, Space, SpaceError, unify, wrap
from .scalar import Scalar, ctx

__all__ = ["maximal_fn", "maximal_fn_classes", "ball_averages", "MaximalOperator"]


def _obj(values):
    arr = np.empty(len(values), dtype=object)
    arr[:] = values
    return arr


def _lcm_den(fracs):
    out = 1
    for x in fracs:
        out = math.lcm(out, x.denominator)
    return out


def _int_ball_averages(vals, ws, space, limit=2 ** 62):
    """Same result as the generic path, via int64 matmuls when everything fits."""
    dv, dw = _lcm_den(vals), _lcm_den(ws)
    iv = [int(v * dv) for v in vals]
    iw = [int(w * dw) for w in ws]
    n = len(iv)
    if n * max(iw, default=0) * max(max(iv, default=0), 1) >= limit:
        return None
    w_arr = np.array(iw, dtype=np.int64)
    wf_arr = np.array([a * b for a, b in zip(iv, iw)], dtype=np.int64)
    out = []
    for s in space.distinct_distances():
        mask = (space.dist <= s).astype(np.int64)
        num = (mask @ wf_arr).tolist()
        den = (mask @ w_arr).tolist()
        out.append((s, [Fraction(a, b * dv) for a, b in zip(num, den)]))
    return out


def ball_averages(f: Fn, space: Space):
    """Averages of ``f`` over every distinct centered ball.

    Returns a list with one ``(radius_threshold, averages)`` entry per
    distinct distance ``s``; ``averages[x]`` is the mean over
    ``{y : dist(x, y) <= s}``, i.e. the open ball of any radius in
    ``(s, next distance]``.
    """
    f.check(space)
    vals, ex_f = unify(f.values)
    ws, ex_w = unify(space.weights)
    if ex_f and ex_w:
        fast = _int_ball_averages(vals, ws, space)
        if fast is not None:
            return fast
    if ex_f != ex_w:
        vals = [ctx.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else v for v in vals]
        ws = [ctx.mpf(w.numerator) / w.denominator if isinstance(w, Fraction) else w for w in ws]
    w_arr = _obj(ws)
    wf_arr = _obj([a * b for a, b in zip(vals, ws)])
    out = []
    for s in space.distinct_distances():
        mask = space.dist <= s
        num = mask.astype(object) @ wf_arr
        den = mask.astype(object) @ w_arr
        out.append((s, [a / b for a, b in zip(num, den)]))
    return out


def maximal_fn(f: Fn, space: Space):
    """``M f(x) = max`` over the finitely many balls centred at ``x``."""
    layers = ball_averages(f, space)
    best = list(layers[0][1])
    for _, avgs in layers[1:]:
        best = [a if a >= b else b for a, b in zip(best, avgs)]
    return Fn([wrap(v) for v in best])


def maximal_fn_classes(cs, cf):
    """Maximal function of a class-constant function on a symmetry-reduced test space.

    Uses the three ball types around each point: the point itself, the
    radius-2 ball (the point plus its distance-1 neighbours) and the whole
    space.
    """
    from .testspace import ClassFn  # local import: testspace depends on this module

    if len(cf.inner) != cs.N or len(cf.outer) != cs.M:
        raise SpaceError("class function shape does not match the class space")
    vals, ex = unify(list(cf.inner) + list(cf.outer))
    if ex and not cs.exact:
        vals = [ctx.mpf(v.numerator) / v.denominator for v in vals]
        ex = False
    fi, fo = vals[:cs.N], vals[cs.N:]
    m = cs.raw("inner_weight", ex)
    ka = cs.raw("outer_weight", ex)
    fib = cs.raw("fiber", ex)  # fib[i][k] = L beta_k h_N / h_i
    h = cs.raw("inner_count", ex)
    lbh = cs.raw("outer_count", ex)

    zero = Fraction(0) if ex else ctx.mpf(0)

    def fsum(xs):
        return ctx.fsum(xs) if not ex else sum(xs, zero)

    tot_mass = fsum([h[i] * m[i] for i in range(cs.N)] + [lbh[k] * ka[k] for k in range(cs.M)])
    tot_int = fsum([h[i] * m[i] * fi[i] for i in range(cs.N)]
                   + [lbh[k] * ka[k] * fo[k] for k in range(cs.M)])
    g_avg = tot_int / tot_mass

    inner_out = []
    for i in range(cs.N):
        num = fsum([fi[i] * m[i]] + [fib[i][k] * ka[k] * fo[k] for k in range(cs.M)])
        den = fsum([m[i]] + [fib[i][k] * ka[k] for k in range(cs.M)])
        inner_out.append(max(fi[i], num / den, g_avg))
    s_int = fsum([fi[i] * m[i] for i in range(cs.N)])
    s_mass = fsum([m[i] for i in range(cs.N)])
    outer_out = []
    for k in range(cs.M):
        avg2 = (fo[k] * ka[k] + s_int) / (ka[k] + s_mass)
        outer_out.append(max(fo[k], avg2, g_avg))
    return ClassFn([wrap(v) for v in inner_out], [wrap(v) for v in outer_out])


class MaximalOperator(TransformerMixin, BaseEstimator):
    """Transformer applying ``M_X`` row-wise to function samples on a fixed space.

    ``X`` is an array-like of shape ``(n_functions, n_points)`` holding
    nonnegative values (floats, ints, Fractions or Scalars).  The output has
    the same shape; ``exact=True`` returns an object array of Scalars.
    """

    def __init__(self, space=None, exact=False):
        self.space = space
        self.exact = exact

    def fit(self, X=None, y=None):
        if self.space is None:
            raise ValueError("MaximalOperator needs a space")
        if X is not None:
            self._check_X(X)
        self.n_features_in_ = len(self.space)
        return self

    def _check_X(self, X):
        rows = [list(r) for r in X]
        for r in rows:
            if len(r) != len(self.space):
                raise ValueError(f"expected {len(self.space)} values per row, got {len(r)}")
            if any(v < 0 for v in r):
                raise ValueError("functions must be nonnegative")
        return rows

    def transform(self, X):
        if not hasattr(self, "n_features_in_"):
            from sklearn.exceptions import NotFittedError
            raise NotFittedError("call fit before transform")
        rows = self._check_X(X)
        out = []
        for r in rows:
            vals = [v if isinstance(v, Scalar) else Scalar(Fraction(v) if isinstance(v, float) else v) for v in r]
            mf = maximal_fn(Fn(vals), self.space)
            out.append(list(mf.values) if self.exact else [float(v) for v in mf.values])
        if self.exact:
            arr = np.empty((len(out), len(self.space)), dtype=object)
            for i, row in enumerate(out):
                arr[i, :] = row
            return arr
        return np.array(out, dtype=float)
