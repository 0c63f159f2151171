from fractions import Fraction

import numpy as np
import pytest

from lorentzlab import Space
from lorentzlab.lorentz import random_space
from lorentzlab.normlab import (
    CSV_HEADER, OperatorNormEstimator, csv_rows, estimate, r1_probe, reevaluate, scaling_probe,
)
from lorentzlab.testspace import model_norm


def test_one_point_space_is_one():
    one = Space.build(["o"], [[0]], [5])
    for q, r in [(1, 2), (2, 2), (3, 1)]:
        est = estimate(one, 2, q, r, budget=10)
        # a one-point space: M is the identity, so the ratio is ||chi||_{p,r}/||chi||_{p,q}
        assert est.lower <= est.ascent
    est = estimate(one, 2, 2, 2, budget=10)
    assert est.lower == 1 and est.ascent == 1


def test_diagonal_estimate_at_least_one(rng):
    for _ in range(3):
        sp = random_space(rng, 5)
        est = estimate(sp, Fraction(3, 2), 2, 2, budget=30, seed=1)
        assert float(est.lower) >= 1 - 1e-12


def test_worked_space_lower_bound(worked_cs, worked_space):
    for sp in (worked_cs, worked_space):
        est = estimate(sp, 2, 1, 2, budget=20, seed=0)
        assert float(est.lower) >= 0.5 - 1e-12
        assert est.ascent >= est.lower


def test_reevaluate_reproduces_lower(worked_cs, two_points):
    for sp in (worked_cs, two_points):
        est = estimate(sp, 2, 1, 2, budget=20, seed=3)
        again = reevaluate(est, sp)
        assert abs(float(again) - float(est.lower)) <= 1e-9 * float(est.lower)
        asc = reevaluate(est, sp, "ascent")
        assert abs(float(asc) - float(est.ascent)) <= 1e-9 * float(est.ascent)


def test_estimate_deterministic_and_budget_monotone(worked_cs):
    a = estimate(worked_cs, 2, 2, 4, budget=30, seed=7)
    b = estimate(worked_cs, 2, 2, 4, budget=30, seed=7)
    assert csv_rows([a]) == csv_rows([b])
    prev = None
    for budget in (0, 10, 40):
        e = estimate(worked_cs, 2, 2, 4, budget=budget, seed=7)
        if prev is not None:
            assert e.ascent >= prev
        prev = e.ascent


def test_estimate_rejects_bad_exponents(two_points):
    with pytest.raises(ValueError):
        estimate(two_points, 1, 2, 2)
    with pytest.raises(ValueError):
        estimate(two_points, 2, 0, 2)
    with pytest.raises(TypeError):
        estimate("nope", 2, 2, 2)


def test_csv_layout(two_points):
    est = estimate(two_points, 2, 1, 2, budget=5, seed=0, space_id="two")
    lines = csv_rows([est]).splitlines()
    assert lines[0].split(",") == list(CSV_HEADER)
    assert lines[1].split(",")[3] == "two"


def test_model_at_kappa_one():
    assert model_norm(2, 2, 4, 1, 2, 1, 1) == 2
    assert model_norm(3, 1, 2, Fraction(1, 2), 1, 2, 1) == Fraction(3, 2)


def test_scaling_probe_flat_model():
    # a/r - b/q = 0: the model does not move with kappa
    res = scaling_probe(2, 2, 4, 1, 2, 1, [2, 3, 4])
    assert len({round(t[3], 12) for t in res["rows"]}) == 1
    assert res["spread"] <= 4


def test_scaling_probe_growing_model():
    res = scaling_probe(2, 4, 2, 1, 2, 1, [2, 3, 4, 5])
    models = [t[3] for t in res["rows"]]
    assert all(b > a for a, b in zip(models, models[1:]))
    assert res["slope"] > 0
    assert res["spread"] <= 8


def test_r1_single_block_closed_form():
    res = r1_probe(2, 2, 1, [1])
    assert abs(res["rows"][0][1] - (2 / 1) ** 1 * (2 / 2) ** 0.5) < 1e-12


def test_r1_doubling_ratio():
    res = r1_probe(2, 2, 1, [8, 64])
    growth = res["rows"][1][1] / res["rows"][0][1]
    assert 1.6 <= growth <= 2.4


def test_r1_diagonal_is_bounded():
    res = r1_probe(2, 2, 2, [8, 16, 32, 64])
    assert all(abs(r - 1) < 1e-12 for _, r in res["rows"])
    assert res["predicted"] == 0


def test_r1_rejects_bad_args():
    with pytest.raises(ValueError):
        r1_probe(2, 1, 2, [4])
    with pytest.raises(ValueError):
        r1_probe(2, float("inf"), 2, [4])


def test_estimator_api(two_points, worked_cs):
    est = OperatorNormEstimator(p=2, q=1, r=2, budget=10)
    assert est.get_params()["q"] == 1
    est.fit(two_points)
    assert est.ascent_ >= est.lower_
    pred = est.predict([two_points, worked_cs])
    assert pred.shape == (2,) and np.all(pred > 0)
    assert est.set_params(r=3).r == 3
