"""Lower bounds for the operator norm ``c(p,q,r,X)`` of ``M_X : L^{p,q} -> L^{p,r}``."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import INF, check_p, check_q, check_random_state, fmt_exponent, inv
from .lorentz import indicator_norm, lorentz_norm, lorentz_norm_pairs
from .maximal import maximal_fn
from .mms import Fn, Space, SpaceError
from .scalar import Scalar
from .testspace import ClassFn, ClassSpace, class_ratio, corollary1_params, model_norm, witness_suite

__all__ = [
    "NormEstimate", "estimate", "explicit_ratio", "explicit_witnesses", "reevaluate",
    "scaling_probe", "r1_probe", "r1_space", "OperatorNormEstimator", "csv_rows",
    "ASCENT_FACTORS", "CSV_HEADER",
]

ASCENT_FACTORS = (Fraction(1, 2), Fraction(2), Fraction(7, 8), Fraction(9, 8))
CSV_HEADER = ("p", "q", "r", "space-id", "lower", "ascent", "model", "seed", "witness-id")


@dataclass
class NormEstimate:
    p: Fraction
    q: object
    r: object
    lower: Scalar
    ascent: Scalar
    model: Scalar | None = None
    witness: dict = field(default_factory=dict)
    seed: int = 0
    space_id: str = ""

    def row(self):
        return (fmt_exponent(self.p), fmt_exponent(self.q), fmt_exponent(self.r), self.space_id,
                _fmt(self.lower), _fmt(self.ascent), "" if self.model is None else _fmt(self.model),
                str(self.seed), self.witness.get("id", ""))


def _fmt(s: Scalar):
    return f"{float(s):.12g}"


def csv_rows(estimates, header=True):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    for e in estimates:
        w.writerow(e.row())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# explicit tier: float search, exact certification


def explicit_ratio(space: Space, f: Fn, p, q, r):
    den = lorentz_norm(f, space, p, q)
    if not den:
        return Scalar(0)
    return lorentz_norm(maximal_fn(f, space), space, p, r) / den


class _FloatKernel:
    """Float evaluation of ``||M f||_{p,r}/||f||_{p,q}`` used only to steer the search."""

    def __init__(self, space, p, q, r):
        self.w = np.array([float(x) for x in space.weights])
        self.masks = [(space.dist <= s).astype(float) for s in space.distinct_distances()]
        self.ball_mass = [m @ self.w for m in self.masks]
        self.p, self.q, self.r = float(p), q, r

    def norm(self, vals, q):
        order = np.argsort(-vals, kind="stable")
        t = vals[order]
        keep = t > 0
        if not keep.any():
            return 0.0
        t = t[keep]
        D = np.cumsum(self.w[order][keep])
        if q == INF:
            return float(np.max(t * D ** (1 / self.p)))
        qf = float(q)
        t_next = np.append(t[1:], 0.0)
        s = np.sum(D ** (qf / self.p) * (t ** qf - t_next ** qf)) * self.p / qf
        return float(s ** (1 / qf))

    def ratio(self, vals):
        den = self.norm(vals, self.q)
        if den == 0:
            return 0.0
        wf = self.w * vals
        mf = np.max([(m @ wf) / bm for m, bm in zip(self.masks, self.ball_mass)], axis=0)
        return self.norm(mf, self.r) / den


def explicit_witnesses(space: Space):
    """Indicators of the whole space, of single points and of every distinct ball."""
    n = len(space)
    seen = set()
    out = [("chi_X", np.ones(n))]
    seen.add(tuple(range(n)))
    for s in space.distinct_distances():
        mask = space.dist <= s
        for x in range(n):
            members = tuple(np.flatnonzero(mask[x]).tolist())
            if members in seen:
                continue
            seen.add(members)
            v = np.zeros(n)
            v[list(members)] = 1.0
            name = f"chi_pt_{space.points[x]}" if len(members) == 1 else f"chi_ball_{space.points[x]}_le_{s}"
            out.append((name, v))
    return out


def _to_fn(vals):
    return Fn([Fraction(float(v)) for v in vals])


def _estimate_explicit(space, p, q, r, budget, seed, top=3):
    kern = _FloatKernel(space, p, q, r)
    scored = [(kern.ratio(v), name, v) for name, v in explicit_witnesses(space)]
    scored.sort(key=lambda t: -t[0])
    best_exact, best_name, best_vals = Scalar(0), None, None
    for _, name, v in scored[:top]:
        ex = explicit_ratio(space, _to_fn(v), p, q, r)
        if best_name is None or ex > best_exact:
            best_exact, best_name, best_vals = ex, name, v
    rng = check_random_state(seed)
    cur = best_vals.copy()
    cur_r = kern.ratio(cur)
    for _ in range(budget):
        j = int(rng.integers(len(cur)))
        fac = float(ASCENT_FACTORS[int(rng.integers(len(ASCENT_FACTORS)))])
        trial = cur.copy()
        trial[j] = trial[j] * fac if trial[j] > 0 else 1.0
        tr = kern.ratio(trial)
        if tr > cur_r:
            cur, cur_r = trial, tr
    asc = explicit_ratio(space, _to_fn(cur), p, q, r)
    witness = {"id": best_name, "tier": "explicit", "values": [_to_fn(best_vals)[i].to_json() for i in range(len(space))]}
    asc_witness = {"tier": "explicit", "values": [_to_fn(cur)[i].to_json() for i in range(len(space))]}
    if asc < best_exact:
        asc, asc_witness = best_exact, dict(witness)
    witness["ascent"] = asc_witness
    return best_exact, asc, witness


# ---------------------------------------------------------------------------
# class tier


def _cf_json(cf: ClassFn):
    return {"inner": [v.to_json() for v in cf.inner], "outer": [v.to_json() for v in cf.outer]}


def _estimate_classes(cs: ClassSpace, p, q, r, budget, seed):
    suite = witness_suite(cs, p, q, r)
    name, lower, g = max(suite, key=lambda t: t[1])
    rng = check_random_state(seed)
    vals = list(g.values())
    cur_r = lower
    n = len(vals)
    for _ in range(budget):
        j = int(rng.integers(n))
        fac = ASCENT_FACTORS[int(rng.integers(len(ASCENT_FACTORS)))]
        trial = list(vals)
        trial[j] = trial[j] * fac if trial[j] else trial[max(range(n), key=lambda i: vals[i])] * Fraction(1, 8)
        cf = ClassFn(trial[:cs.N], trial[cs.N:])
        tr = class_ratio(cs, cf, p, q, r)
        if tr > cur_r:
            vals, cur_r = trial, tr
    witness = {"id": name, "tier": "class", "values": _cf_json(g),
               "ascent": {"tier": "class", "values": _cf_json(ClassFn(vals[:cs.N], vals[cs.N:]))}}
    return lower, cur_r, witness


def estimate(space, p, q, r, budget=200, seed=0, model=None, space_id=""):
    """Witness suite followed by seeded multiplicative coordinate ascent.

    ``space`` is an explicit :class:`Space` or a :class:`ClassSpace` (whose
    ascent runs over class-constant functions).
    """
    p = check_p(p)
    q, r = check_q(q), check_q(r, "r")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if isinstance(space, ClassSpace):
        lower, asc, wit = _estimate_classes(space, p, q, r, budget, seed)
    elif isinstance(space, Space):
        lower, asc, wit = _estimate_explicit(space, p, q, r, budget, seed)
    else:
        raise TypeError("estimate needs a Space or a ClassSpace")
    return NormEstimate(p, q, r, lower, asc, model, wit, seed, space_id)


def reevaluate(est: NormEstimate, space, which="lower"):
    """Recompute the ratio of the stored witness (``which='ascent'`` for the search result)."""
    w = est.witness if which == "lower" else est.witness["ascent"]
    if w["tier"] == "class":
        cf = ClassFn([Scalar.from_json(v) for v in w["values"]["inner"]],
                     [Scalar.from_json(v) for v in w["values"]["outer"]])
        return class_ratio(space, cf, est.p, est.q, est.r)
    f = Fn([Scalar.from_json(v) for v in w["values"]])
    return explicit_ratio(space, f, est.p, est.q, est.r)


# ---------------------------------------------------------------------------
# probes


def scaling_probe(p, q, r, lam, a, b, kappa_list, budget=40, seed=0):
    """``ascent / model`` for Corollary-1 spaces over ``kappa_list``.

    Returns ``{"rows": [(kappa, ratio, ascent, model)], "spread": max/min,
    "slope": log-log slope of ascent against kappa}``.
    """
    rows = []
    for kappa in kappa_list:
        params = corollary1_params(p, lam, a, b, kappa)
        cs = ClassSpace(params)
        mod = model_norm(p, q, r, lam, a, b, kappa)
        est = estimate(cs, p, q, r, budget=budget, seed=seed, model=mod)
        rows.append((kappa, float(est.ascent / mod), float(est.ascent), float(mod)))
    ratios = [t[1] for t in rows]
    spread = max(ratios) / min(ratios)
    slope = None
    if len(rows) > 1:
        xs = np.log([t[0] for t in rows])
        ys = np.log([t[2] for t in rows])
        if np.ptp(xs) > 0:
            slope = float(np.polyfit(xs, ys, 1)[0])
    return {"rows": rows, "spread": spread, "slope": slope}


def r1_space(n):
    """``n`` atoms at mutual distance 1 with ``mu(E_k) = 2^k``; each atom is a ball."""
    dist = np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64)
    return Space.build([f"E{k}" for k in range(1, n + 1)], dist, [Scalar.pow2(k) for k in range(1, n + 1)])


def _r1_pairs(p, q, r, n0, masses):
    s = Fraction(2) / (q + r) if q != INF else None
    vals = []
    for k in range(1, n0 + 1):
        vals.append(Scalar(k) ** (-s) * masses[k - 1] ** (-1 / Fraction(p)))
    return vals, masses[:n0]


def r1_probe(p, q, r, n0_list, space=None):
    """Ratios ``||g_{n0}||_{p,r} / ||g_{n0}||_{p,q}`` and their fitted growth exponent.

    ``g_{n0} = sum_{n <= n0} n^{-2/(q+r)} mu(E_n)^{-1/p} chi_{E_n}``.  The sets
    ``E_n`` are the atoms of ``space`` in order (default :func:`r1_space`).
    """
    p = check_p(p)
    q, r = check_q(q), check_q(r, "r")
    if q == INF or r == INF:
        raise ValueError("r1_probe needs finite q and r")
    if r > q:
        raise ValueError("r1_probe needs r <= q")
    n_max = max(n0_list)
    if space is None:
        space = r1_space(n_max)
    if len(space) < n_max:
        raise SpaceError(f"space offers {len(space)} disjoint sets, need {n_max}")
    masses = list(space.weights[:n_max])
    rows = []
    for n0 in n0_list:
        vals, ms = _r1_pairs(p, q, r, n0, masses)
        ratio = lorentz_norm_pairs(vals, ms, p, r) / lorentz_norm_pairs(vals, ms, p, q)
        rows.append((n0, float(ratio)))
    exponent = None
    if len(rows) > 1:
        exponent = float(np.polyfit(np.log([t[0] for t in rows]), np.log([t[1] for t in rows]), 1)[0])
    predicted = float((q - r) / (r * (q + r)))
    return {"rows": rows, "exponent": exponent, "predicted": predicted}


class OperatorNormEstimator(BaseEstimator):
    """sklearn-style wrapper: ``fit(space)`` stores a :class:`NormEstimate`."""

    def __init__(self, p=2, q=2, r=2, budget=200, seed=0):
        self.p = p
        self.q = q
        self.r = r
        self.budget = budget
        self.seed = seed

    def fit(self, X, y=None):
        self.estimate_ = estimate(X, self.p, self.q, self.r, budget=self.budget, seed=self.seed)
        self.lower_ = self.estimate_.lower
        self.ascent_ = self.estimate_.ascent
        return self

    def predict(self, X):
        """Ascent values (floats) for a list of spaces."""
        return np.array([float(estimate(s, self.p, self.q, self.r, budget=self.budget, seed=self.seed).ascent)
                         for s in X])
