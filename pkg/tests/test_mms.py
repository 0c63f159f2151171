import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorentzlab import Fn, Scalar, Space, SpaceError, ball, distribution
from lorentzlab.lorentz import random_fn, random_space
from lorentzlab.mms import support_check, total_measure


def test_ball_is_open(two_points):
    assert ball(two_points, "x", 1) == {"x"}
    assert ball(two_points, "x", Fraction(3, 2)) == {"x", "y"}


def test_ball_errors(two_points):
    with pytest.raises(SpaceError):
        ball(two_points, "x", 0)
    with pytest.raises((SpaceError, KeyError)):
        ball(two_points, "z", 1)


def test_ball_on_test_space(worked_cs, worked_space):
    inner, outer = worked_cs.layout()
    labels = worked_space.labels
    x = worked_space.points[inner[1][0]]
    got = ball(worked_space, x, 2)
    # the point itself plus every outer point whose Gamma_2 is x
    assert x in got
    assert len(got) == 1 + sum(1 for j in range(len(worked_space)) if worked_space.dist[inner[1][0], j] == 1)
    assert all(labels[worked_space.index(y)].startswith("xo") for y in got - {x})


def test_distribution_examples():
    sp = Space.build(["a", "b"], [[0, 1], [1, 0]], [1, 3])
    assert distribution(Fn([0, 0]), sp).is_zero
    d = distribution(Fn([2, 1]), sp)
    assert d(Fraction(1, 2)) == 4 and d(1) == 4
    assert d(Fraction(3, 2)) == 1 and d(2) == 1
    assert d(3) == 0
    e = Space.build(["e"], [[0]], [9])
    assert distribution(Fn([1]), e)(1) == 9


def test_total_measure(worked_space):
    assert total_measure(Space.build([0, 1], [[0, 1], [1, 0]], [1, 3])) == 4
    # 1 + 2*2 + 8*8 + 128*128
    assert total_measure(worked_space) == 16453
    assert total_measure(worked_space).is_exact
    assert support_check(worked_space)
    with pytest.raises(SpaceError, match="empty space"):
        total_measure(Space.build([], np.zeros((0, 0)), []))


def test_metric_checked():
    with pytest.raises(SpaceError):
        Space.build([0, 1, 2], [[0, 1, 5], [1, 0, 1], [5, 1, 0]], [1, 1, 1])
    with pytest.raises(SpaceError):
        Space.build([0, 1], [[0, 1], [1, 0]], [1, 0])


def test_space_json_roundtrip(rng):
    sp = random_space(rng, 6, rational_dist=True)
    back = Space.loads(sp.dumps())
    assert back.dumps() == sp.dumps()
    assert json.loads(sp.dumps())["weights"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_distribution_matches_definition(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, 7)
    f = random_fn(rng, sp)
    d = distribution(f, sp)
    for t in {v for v in f.values if v} | {Scalar(Fraction(1, 7))}:
        want = sum((w for v, w in zip(f.values, sp.weights) if v >= t), Scalar(0))
        assert d(t) == want
    # permutation invariance
    perm = rng.permutation(len(sp))
    sp2 = Space.build([sp.points[i] for i in perm], sp.dist[np.ix_(perm, perm)],
                      [sp.weights[i] for i in perm])
    f2 = Fn([f.values[i] for i in perm])
    assert distribution(f2, sp2).items() == d.items()
