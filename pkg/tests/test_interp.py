import json
from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentzlab import Fn, Space, maximal_fn
from lorentzlab._validation import INF
from lorentzlab.interp import (
    box_constant, chain_exponents, comparability_bounds, lambda_split, report_json, s_comparability,
    s_transform, t_transform, verify_chain,
)
from lorentzlab.lorentz import random_fn, random_space
from lorentzlab.suites import CHAIN_TUPLES


def _points(n, weights):
    dist = [[0 if i == j else 1 for j in range(n)] for i in range(n)]
    return Space.build(range(n), dist, weights)


def test_indicator_profile():
    sp = _points(2, [4, 5])
    prof = s_transform(Fn([1, 1]), sp, 2)
    for n in range(-6, 1):
        assert prof(n) == 3 * Fr(2) ** n
    for n in range(1, 4):
        assert prof(n) == 0
    # geometric tail with ratio 2: ||S f||_1 = 3 (1 + 1/2 + ...) = 6
    assert abs(float(prof.norm(1)) - 6) < 1e-30
    assert abs(float(prof.norm(INF)) - 3) < 1e-30


def test_zero_profile(two_points):
    prof = s_transform(Fn([0, 0]), two_points, 2)
    assert prof.is_zero and prof(0) == 0 and prof.norm(2) == 0
    with pytest.raises(ValueError):
        s_comparability(Fn([0, 0]), two_points, 2, 2)


def test_t_transform_trivial_cases(two_points):
    one = _points(1, [3])
    f = Fn([Fr(5, 2)])
    assert t_transform(f, one, 2) == s_transform(f, one, 2)
    chi = Fn([1, 1])
    assert t_transform(chi, two_points, 3) == s_transform(chi, two_points, 3)


def test_t_dominates_s(worked_space, rng):
    for _ in range(5):
        f = random_fn(rng, worked_space)
        S, T = s_transform(f, worked_space, 2), t_transform(f, worked_space, 2)
        if S.is_zero:
            continue
        for n in range(S.n_lo - 3, S.n_hi + 2):
            assert T.mass(n) >= S.mass(n)


def test_split_above_peak(worked_space, rng):
    f = random_fn(rng, worked_space)
    prof = s_transform(f, worked_space, 2)
    top = Fr(int(float(prof.norm(INF))) + 1)
    sd = lambda_split(f, worked_space, 2, top)
    assert sd.levels == () and sd.f1 == f and all(v == 0 for v in sd.f0.values)


def test_split_small_lambda_takes_all_levels(two_points):
    f = Fn([Fr(1, 2), 3])
    sd = lambda_split(f, two_points, 2, Fr(1, 10 ** 6))
    prof = s_transform(f, two_points, 2)
    assert set(prof.indices()) <= set(sd.levels)
    assert sd.f0 == f
    assert s_transform(sd.f1, two_points, 2).is_zero


def test_split_single_indicator(two_points):
    f = Fn([0, 2])
    peak = s_transform(f, two_points, 2)(1)  # 2 * sqrt(3)
    low = lambda_split(f, two_points, 2, Fr(3))
    high = lambda_split(f, two_points, 2, Fr(4))
    assert float(peak) > 3 and float(peak) < 4
    assert low.f0 == f
    assert high.f1 == f


def test_split_equality_on_levels_exact(worked_space, rng):
    for _ in range(5):
        f = random_fn(rng, worked_space)
        prof = s_transform(f, worked_space, 2)
        if prof.is_zero:
            continue
        sd = lambda_split(f, worked_space, 2, Fr(1, 2))
        p0 = s_transform(sd.f0, worked_space, 2)
        assert all(p0.mass(n) == prof.mass(n) for n in sd.levels)


def test_split_rejects_nonpositive_lambda(two_points):
    with pytest.raises(ValueError):
        lambda_split(Fn([1, 1]), two_points, 2, 0)


@settings(max_examples=300, deadline=None)
@given(vals=st.lists(st.fractions(min_value=0, max_value=64, max_denominator=16), min_size=4, max_size=4),
       ws=st.lists(st.integers(min_value=1, max_value=50), min_size=4, max_size=4),
       lam=st.fractions(min_value=Fr(1, 64), max_value=200, max_denominator=64),
       p=st.sampled_from([Fr(3, 2), Fr(2), Fr(3)]))
def test_split_invariants_property(vals, ws, lam, p):
    sp = _points(4, ws)
    sd = lambda_split(Fn(vals), sp, p, lam)
    assert sd.ok


@pytest.mark.parametrize("tup", CHAIN_TUPLES, ids=lambda t: str(t))
def test_verify_chain_all_pass(tup, worked_space, rng):
    q0, r0, q1, r1, th = tup
    for _ in range(3):
        f = random_fn(rng, worked_space)
        if not f.support():
            continue
        rep = verify_chain(f, worked_space, 2, q0, q1, r0, r1, th)
        assert rep["all_pass"], rep["failed"]
        ids = {c["id"] for c in rep["checks"]}
        if r1 == INF:
            assert "t1_zero" in ids
        json.loads(report_json(rep))


def test_verify_chain_small_space():
    sp = _points(3, [1, 2, 4])
    rep = verify_chain(Fn([1, Fr(1, 2), 3]), sp, Fr(3, 2), 1, 4, 2, 4, Fr(1, 2))
    assert rep["all_pass"]


def test_chain_exponents():
    q_t, r_t, tau, xi = chain_exponents(1, 2, 4, 4, Fr(1, 2))
    assert q_t == Fr(8, 5) and r_t == Fr(8, 3)
    with pytest.raises(ValueError):
        chain_exponents(2, 2, 1, 4, Fr(1, 2))
    with pytest.raises(ValueError):
        chain_exponents(1, 2, 4, 4, 1)


def test_box_constant_values():
    assert box_constant(2, INF) == 2
    lo, hi = comparability_bounds(2, INF)
    assert (lo, hi) == (1, 2)
    lo, hi = comparability_bounds(2, 1)
    assert abs(float(hi) - 4 * 0.6931471805599453) < 1e-12


def test_comparability_bounds_on_corpus(worked_space, rng):
    spaces = [worked_space] + [random_space(rng, 6) for _ in range(4)]
    for sp in spaces:
        for _ in range(8):
            f = random_fn(rng, sp)
            if not f.support():
                continue
            for p in (Fr(3, 2), 2, 3):
                for q in (1, 2, 4, INF):
                    lo, hi = comparability_bounds(p, q)
                    ratio = s_comparability(f, sp, p, q)
                    assert lo * (1 - 1e-30) <= ratio <= hi * (1 + 1e-30)


def test_indicator_comparability_closed_form():
    sp = _points(1, [9])
    # ||chi||_{2,1} = 2 * 9^(1/2) = 6, ||S chi||_1 = 6
    assert abs(float(s_comparability(Fn([1]), sp, 2, 1)) - 1) < 1e-30


def test_maximal_matches_profile(worked_space, rng):
    f = random_fn(rng, worked_space)
    assert t_transform(f, worked_space, 2) == s_transform(maximal_fn(f, worked_space), worked_space, 2)
