import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorentzlab import Fn, Space, avg_fn, indicator_norm, lorentz_norm
from lorentzlab.lorentz import (block_comparability, empirical_constant_probes, lebesgue_norm,
                                lorentz_norm_pairs, random_fn, random_space, stacking_bound,
                                stacking_check)
from lorentzlab.scalar import ctx

INF = math.inf


def _atoms(*weights):
    n = len(weights)
    return Space.build(range(n), np.ones((n, n), dtype=int) - np.eye(n, dtype=int), weights)


def test_indicator_closed_form():
    sp = _atoms(4)
    assert lorentz_norm(Fn([1]), sp, 2, 1) == 4
    for p in (Fraction(3, 2), 2, 3):
        for q in (1, 2, 3, INF):
            got = lorentz_norm(Fn([1]), sp, p, q).as_mpf()
            want = indicator_norm(4, p, q).as_mpf()
            assert abs(got - want) <= abs(want) * ctx.mpf(10) ** -70


def test_indicator_infinity_uses_nonstrict_distribution():
    sp = _atoms(9)
    assert lorentz_norm(Fn([1]), sp, 2, INF) == 3


def test_two_level_example():
    sp = _atoms(1, 3)
    got = lorentz_norm(Fn([2, 1]), sp, 2, 2)
    assert abs(got.as_mpf() - ctx.sqrt(7)) < ctx.mpf(10) ** -60


def test_p_must_exceed_one():
    with pytest.raises(ValueError, match="p must exceed 1"):
        lorentz_norm(Fn([1]), _atoms(1), 1, 2)


def test_avg_fn_examples():
    sp = _atoms(1, 3)
    assert list(avg_fn(Fn([4, 0]), sp)) == [1, 1]
    assert list(avg_fn(Fn([5, 5]), sp)) == [5, 5]


def test_stacking_examples():
    sp = _atoms(1, 2)
    assert stacking_check([Fn([1, 0])], sp)
    assert stacking_check([Fn([1, 0]), Fn([0, 1])], sp)
    sp2 = _atoms(5, 2)
    assert not stacking_check([Fn([1, 0]), Fn([0, 1])], sp2)
    with pytest.raises(ValueError):
        stacking_check([Fn([1, 1]), Fn([0, 1])], sp)


def test_block_comparability_examples():
    sp = _atoms(1, 1)
    assert block_comparability([Fn([1, 0])], sp, 2, 2) == (1.0, 1.0)
    hi, lo = block_comparability([Fn([1, 0]), Fn([0, 1])], sp, 2, 2)
    assert hi == pytest.approx(1.0) and lo == pytest.approx(1.0)


def test_probes():
    out = empirical_constant_probes(lambda rng: random_space(rng, 5), 2, 2, 2, trials=20, seed=1)
    vals = {k: float(v) for k, v in out.items()}
    assert vals["embedding"] == pytest.approx(1.0)
    assert 0 < vals["avg"] <= 1 + 1e-12  # averaging contracts L^2
    assert vals["triangle"] > 0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([Fraction(3, 2), 2, 3]))
def test_lorentz_equals_lebesgue_on_diagonal(seed, p):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, int(rng.integers(1, 33)))
    f = random_fn(rng, sp)
    a, b = lorentz_norm(f, sp, p, p), lebesgue_norm(f, sp, p)
    assert a.rel_diff(b) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_scaling_and_rearrangement(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, 8)
    f = random_fn(rng, sp)
    c = Fraction(int(rng.integers(1, 9)), 3)
    for q in (1, 3, INF):
        a = lorentz_norm(f.scale(c), sp, 2, q)
        b = lorentz_norm(f, sp, 2, q) * c
        assert a.rel_diff(b) <= 1e-30
    vals, ms = list(f.values), list(sp.weights)
    perm = rng.permutation(len(vals))
    x = lorentz_norm_pairs(vals, ms, 2, 3)
    y = lorentz_norm_pairs([vals[i] for i in perm], [ms[i] for i in perm], 2, 3)
    assert x == y


def test_block_comparability_bound_random():
    from lorentzlab.suites import lemma1
    res = lemma1(trials=130, seed=3)
    assert res["pass"] and res["cases"] >= 500
    assert stacking_bound(2, INF) == pytest.approx(2 ** 0.5)
