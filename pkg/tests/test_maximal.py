from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorentzlab import Fn, MaximalOperator, Space, maximal_fn
from lorentzlab.lorentz import random_fn, random_space
from lorentzlab.maximal import maximal_fn_classes
from lorentzlab.testspace import ClassFn


def test_examples(two_points):
    one = Space.build(["a"], [[0]], [5])
    assert list(maximal_fn(Fn([Fraction(7, 3)]), one)) == [Fraction(7, 3)]
    assert list(maximal_fn(Fn([4, 0]), two_points)) == [4, 1]


def test_constant_fixed(worked_space):
    assert all(v == 1 for v in maximal_fn(Fn.constant(worked_space), worked_space))


def test_class_tier_examples(worked_cs, worked_space):
    one = maximal_fn_classes(worked_cs, worked_cs.constant(1))
    assert all(v == 1 for v in one.values())
    for cf in (worked_cs.indicator(inner=[0]), worked_cs.indicator(outer=[1]),
               ClassFn([Fraction(1, 2), 3], [2, Fraction(1, 7)])):
        a = worked_cs.expand(maximal_fn_classes(worked_cs, cf))
        b = maximal_fn(worked_cs.expand(cf), worked_space)
        assert all(x.rel_diff(y) <= 1e-9 for x, y in zip(a, b))


def test_shape_mismatch(worked_cs):
    with pytest.raises(ValueError):
        maximal_fn_classes(worked_cs, ClassFn([1], [1, 1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_operator_properties(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, 9, rational_dist=bool(seed % 2))
    f, g = random_fn(rng, sp), random_fn(rng, sp)
    Mf, Mg = maximal_fn(f, sp), maximal_fn(g, sp)
    assert all(a >= b for a, b in zip(Mf, f))
    assert all(a <= b + c for a, b, c in zip(maximal_fn(f + g, sp), Mf, Mg))
    c = Fraction(5, 3)
    assert list(maximal_fn(f.scale(c), sp)) == [v * c for v in Mf]
    big = f + g
    assert all(a <= b for a, b in zip(Mf, maximal_fn(big, sp)))


def test_transformer(two_points):
    op = MaximalOperator(space=two_points).fit()
    out = op.transform([[4, 0], [1, 1]])
    assert out.tolist() == [[4.0, 1.0], [1.0, 1.0]]
    ex = MaximalOperator(space=two_points, exact=True).fit().transform([[4, 0]])
    assert ex[0, 1] == 1
    assert op.get_params()["exact"] is False
    with pytest.raises(ValueError):
        op.transform([[1, 2, 3]])
    with pytest.raises(ValueError):
        op.transform([[-1, 0]])
