"""Seeded property suites shared by ``lorentzlab verify`` and the acceptance tests.

Each suite returns ``{"name", "pass", "cases", "failures", ...}`` with
plain JSON values.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from ._validation import INF, check_random_state, fmt_exponent
from .interp import verify_chain
from .lorentz import avg_fn, block_comparability, lorentz_norm_pairs, random_fn, stacking_bound
from .maximal import maximal_fn
from .mms import Fn, Space
from .normlab import r1_probe, scaling_probe
from .testspace import ClassSpace, TestSpaceParams, op_A, op_Mtilde, transfer_factor, transfer_pairs

__all__ = ["EXPLICIT_CORPUS", "explicit_corpus", "lemma1", "lemma2", "sandwich", "cor1", "r1",
           "interp", "SUITES", "CHAIN_TUPLES"]

# (p, N, M) of the explicit test spaces used throughout; the first is the 139-point one
EXPLICIT_CORPUS = ((2, 2, 2), (2, 2, 1), (2, 1, 2), (Fraction(3, 2), 2, 1), (3, 2, 1))

# (q0, r0, q1, r1, theta)
CHAIN_TUPLES = ((1, 2, 4, 4, Fraction(1, 2)), (1, 1, 2, 4, Fraction(1, 3)),
                (2, 3, 3, 6, Fraction(1, 2)), (1, 2, INF, INF, Fraction(1, 2)),
                (1, 2, 3, INF, Fraction(1, 2)))

_CACHE = {}


def explicit_corpus():
    """``[(ClassSpace, Space, layout)]`` for :data:`EXPLICIT_CORPUS`, built once."""
    if "corpus" not in _CACHE:
        out = []
        for p, N, M in EXPLICIT_CORPUS:
            cs = ClassSpace(TestSpaceParams.generate(p, N, M))
            out.append((cs, cs.explicit(), cs.layout()))
        _CACHE["corpus"] = out
    return _CACHE["corpus"]


def _result(name, failures, cases, **extra):
    return {"name": name, "pass": not failures, "cases": cases,
            "failures": failures[:20], **extra}


def _stacked_family(rng, n_blocks=4):
    """Random space plus disjoint blocks whose masses double, so stacking holds."""
    sizes = [int(rng.integers(1, 3)) for _ in range(n_blocks)]
    weights, prior = [], 0
    for s in sizes:
        need = max(1, prior)
        ws = [need + int(rng.integers(0, 4)) for _ in range(s)]
        weights += ws
        prior += sum(ws)
    n = len(weights)
    dist = np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64)
    space = Space.build(range(n), dist, weights)
    fs, start = [], 0
    for s in sizes:
        vals = [0] * n
        for j in range(start, start + s):
            vals[j] = Fraction(int(rng.integers(1, 33)), 8)
        fs.append(Fn(vals))
        start += s
    return space, fs


def lemma1(trials=100, seed=0, exps=((2, 2), (Fraction(3, 2), 1), (3, INF), (2, 4))):
    """Block comparability under stacking stays within the derived constant."""
    rng = check_random_state(seed)
    failures, cases, worst = [], 0, 0.0
    for t in range(trials):
        space, fs = _stacked_family(rng)
        for p, q in exps:
            hi, lo = block_comparability(fs, space, p, q)
            C = stacking_bound(p, q)
            cases += 1
            worst = max(worst, hi / C, lo / C)
            if hi > C * (1 + 1e-12) or lo > C * (1 + 1e-12):
                failures.append({"trial": t, "p": str(p), "q": fmt_exponent(q), "ratios": [hi, lo]})
    return _result("lemma1", failures, cases, worst_fraction_of_bound=worst)


def lemma2(trials=0, seed=0, ps=(Fraction(3, 2), 2, 3), max_nm=3, rtol=1e-9):
    """Exact transfer identity ``||A_{k,i} f|| = factor * ||f||`` at both tiers."""
    rng = check_random_state(seed)
    failures, cases = [], 0
    for p in ps:
        for N, M in itertools.product(range(1, max_nm + 1), repeat=2):
            cs = ClassSpace(TestSpaceParams.generate(p, N, M))
            for i, k in itertools.product(range(N), range(M)):
                fac = transfer_factor(cs, k, i, p).as_mpf()
                h_i = int(cs.inner_count[i].as_fraction())
                vals = [Fraction(int(v), 4) for v in rng.integers(1, 17, size=min(h_i, 6))]
                vals = (vals * (h_i // len(vals) + 1))[:h_i]
                (fv, fm), (av, am) = transfer_pairs(cs, k, i, vals)
                for r in (1, 2, INF):
                    got = (lorentz_norm_pairs(av, am, p, r) / lorentz_norm_pairs(fv, fm, p, r)).as_mpf()
                    cases += 1
                    if abs(got / fac - 1) > rtol:
                        failures.append({"p": str(p), "N": N, "M": M, "i": i, "k": k,
                                         "r": fmt_exponent(r), "got": float(got), "want": float(fac)})
    return _result("lemma2", failures, cases)


def _sandwich_one(cs, space, f):
    """Violations of ``A f <= M f <= max(f, 4 A f, 2 M~ f, f_avg)`` and of the provable
    ``A f <= 2 M f <= 2 max(2 f, 4 A f, 2 M~ f, f_avg)`` at the points of ``space``."""
    Mf = maximal_fn(f, space)
    Af = op_A(cs, f)
    Mt = op_Mtilde(cs, f)
    av = avg_fn(f, space)
    printed = {"lower": 0, "upper": 0}
    corrected = {"lower": 0, "upper": 0}
    for x in range(len(space)):
        if Af[x] > Mf[x]:
            printed["lower"] += 1
        if Af[x] > Mf[x] * 2:
            corrected["lower"] += 1
        if Mf[x] > max(f[x], Af[x] * 4, Mt[x] * 2, av[x]):
            printed["upper"] += 1
        if Mf[x] > max(f[x] * 2, Af[x] * 4, Mt[x] * 2, av[x]):
            corrected["upper"] += 1
    return printed, corrected


def sandwich(trials=100, seed=0):
    """Pointwise sandwich on the explicit corpus.

    ``pass`` refers to the printed form; ``pass_corrected`` to the form with
    the factors that actually follow from the ball structure (the radius-2
    ball around ``x°`` also carries ``x°`` itself).
    """
    rng = check_random_state(seed)
    failures, cases = [], 0
    tot_p = {"lower": 0, "upper": 0}
    tot_c = {"lower": 0, "upper": 0}
    for idx, (cs, space, _) in enumerate(explicit_corpus()):
        for t in range(trials):
            f = random_fn(rng, space)
            pr, co = _sandwich_one(cs, space, f)
            cases += 1
            for key in tot_p:
                tot_p[key] += pr[key]
                tot_c[key] += co[key]
            if pr["lower"] or pr["upper"]:
                failures.append({"space": idx, "trial": t, **pr})
    return _result("sandwich", failures, cases, violations=tot_p, violations_corrected=tot_c,
                   pass_corrected=not any(tot_c.values()))


COR1_GRID = {"p": (2, 3), "ab": ((1, 1), (2, 1), (1, 2)), "lam": (Fraction(1, 2), 1, 2),
             "qr": ((2, 2), (2, 4), (1, INF))}


def cor1(trials=0, seed=0, kappas=(2, 3, 4, 5), budget=40, limit=8.0, grid=None):
    """Spread of ascent/model over kappa for every Corollary-1 parameter set."""
    grid = grid or COR1_GRID
    failures, rows, cases = [], [], 0
    for p, (a, b), lam, (q, r) in itertools.product(grid["p"], grid["ab"], grid["lam"], grid["qr"]):
        res = scaling_probe(p, q, r, lam, a, b, kappas, budget=budget, seed=seed)
        cases += 1
        row = {"p": str(p), "a": a, "b": b, "lam": str(lam), "q": fmt_exponent(q),
               "r": fmt_exponent(r), "spread": res["spread"]}
        rows.append(row)
        if not res["spread"] <= limit:
            failures.append(row)
    return _result("cor1", failures, cases, max_spread=max(r["spread"] for r in rows), rows=rows)


R1_CASES = ((2, 2, 1), (2, 3, 2), (3, 2, 1))


def r1(trials=0, seed=0, n0_list=(8, 16, 32, 64), rel=0.2, cases=R1_CASES):
    failures, rows = [], []
    for p, q, r in cases:
        res = r1_probe(p, q, r, n0_list)
        err = abs(res["exponent"] - res["predicted"]) / res["predicted"]
        row = {"p": p, "q": q, "r": r, "exponent": res["exponent"],
               "predicted": res["predicted"], "rel_err": err}
        rows.append(row)
        if err > rel:
            failures.append(row)
    return _result("r1", failures, len(rows), rows=rows)


def interp(trials=200, seed=0, p=2, tuples=CHAIN_TUPLES):
    """``verify_chain`` on random functions of the 139-point space for every tuple."""
    rng = check_random_state(seed)
    cs, space, _ = explicit_corpus()[0]
    failures, cases = [], 0
    counts = {}
    for t in range(trials):
        f = random_fn(rng, space)
        if not f.support():
            continue
        for q0, r0, q1, r1_, th in tuples:
            rep = verify_chain(f, space, p, q0, q1, r0, r1_, th)
            cases += 1
            for cid in rep["failed"]:
                counts[cid] = counts.get(cid, 0) + 1
            if not rep["all_pass"]:
                failures.append({"trial": t, "tuple": [fmt_exponent(x) for x in (q0, r0, q1, r1_)]
                                 + [str(th)], "failed": rep["failed"]})
    return _result("interp", failures, cases, failed_ids=counts)


SUITES = {"lemma1": lemma1, "lemma2": lemma2, "sandwich": sandwich, "cor1": cor1, "r1": r1,
          "interp": interp}
