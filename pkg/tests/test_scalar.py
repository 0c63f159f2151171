import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from lorentzlab import Scalar
from lorentzlab.scalar import ctx, ssum


def test_exact_arithmetic_stays_exact():
    a, b = Scalar(Fraction(1, 3)), Scalar(Fraction(2, 3))
    assert (a + b).is_exact and a + b == 1
    assert (a * b) == Fraction(2, 9)
    assert (b ** 2) == Fraction(4, 9)


def test_irrational_power_promotes():
    x = Scalar(2) ** Fraction(1, 2)
    assert not x.is_exact
    assert abs(x.as_mpf() - ctx.sqrt(2)) < ctx.mpf(10) ** -70


def test_nonnegative():
    with pytest.raises(ValueError):
        Scalar(-1)


def test_huge_powers_of_two():
    x = Scalar.pow2(10 ** 6)
    assert not x.is_exact
    assert abs(x.log2() - 10 ** 6) < 1e-6
    assert Scalar.pow2(100).is_exact


def test_json_roundtrip():
    for v in (Scalar(Fraction(7, 3)), Scalar.pow2(10 ** 5), Scalar(0)):
        back = Scalar.from_json(v.to_json())
        assert back.rel_diff(v) < 1e-30


def test_mode_env(monkeypatch):
    monkeypatch.setenv("LML_MODE", "log")
    assert not Scalar(3).is_exact
    monkeypatch.setenv("LML_MODE", "exact")
    with pytest.raises(OverflowError):
        Scalar(2) ** Fraction(1, 2)
    monkeypatch.setenv("LML_MODE", "bogus")
    with pytest.raises(ValueError):
        Scalar(1)


@given(st.lists(st.fractions(min_value=0, max_value=10 ** 6, max_denominator=1000), min_size=1, max_size=8))
def test_exact_vs_log_agree(values):
    exact = ssum(values)
    logv = ssum([Scalar(ctx.mpf(v.numerator) / v.denominator) for v in values])
    assert exact.rel_diff(logv) <= 1e-12
    assert math.isclose(float(exact), float(sum(values)), rel_tol=1e-12)
