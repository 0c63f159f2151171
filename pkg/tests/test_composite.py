import itertools
from fractions import Fraction

import numpy as np
import pytest

from lorentzlab import Fn, Space, maximal_fn
from lorentzlab.composite import (
    BAND, BOUNDED, DIVERGENT, UNSPECIFIED, Lemma5Params, Lemma6Params, Surd, combine,
    combine_scales, components_from_json, components_to_json, lemma5_components,
    lemma6_components, model_regime,
)
from lorentzlab.normlab import estimate


def test_surd_exact_arithmetic():
    r2 = Surd.sqrt(2)
    assert r2 * 2 == Surd.sqrt(8)
    assert Surd.sqrt(9) == Surd(3)
    assert Surd.sqrt(2) - Fraction(1, 4) > Fraction(1)
    assert Surd.sqrt(2) < Fraction(17, 12)
    assert Surd.sqrt(2) > Fraction(7, 5)


def test_lemma5_degenerate_base():
    lp = Lemma5Params(2, Surd(Fraction(1, 3)), 1, 2, 1, Fraction(1, 10))
    for p, lam, a, b, kappa in lemma5_components(lp, 6):
        assert kappa == 1 and lam == 1


def test_lemma5_first_term():
    # eps * d = 1 with a=3, b=4 (d = 5)
    lp = Lemma5Params(2, Surd(0), 3, 4, 2, Fraction(1, 5))
    p, lam, a, b, kappa = lemma5_components(lp, 1)[0]
    assert kappa == 2
    assert lam.is_exact and lam == 8


def test_lemma5_model_bound_grows():
    lp = Lemma5Params(2, Surd(Fraction(1, 2)), 1, 1, 2, Fraction(1, 8))
    vals = [float(lam) * float(k) ** 0.5 for _, lam, _, _, k in lemma5_components(lp, 8)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    for n, v in enumerate(vals, start=1):
        target = 2 ** ((n + 2) * float(lp.eps_d))
        assert abs(v - target) / target < 1e-12


def test_lemma5_rejects_bad_args():
    lp = Lemma5Params(2, Surd(0), 1, 1, 2, Fraction(1, 4))
    with pytest.raises(ValueError):
        lemma5_components(lp, 0)
    with pytest.raises(ValueError):
        Lemma5Params(2, Surd(0), 1, 1, 2, 0)


def test_model_regime_cases():
    # a=3, b=4, eps=1/50: eps*d = 1/10; q=4 gives b/q = 1
    g, ed = Fraction(-1, 2), Fraction(1, 10)
    lp = Lemma5Params(2, Surd(g), 3, 4, 2, Fraction(1, 50))
    assert lp.eps_d == ed

    def r_for(x):  # a/r - b/q = x with q = 4
        t = (x + 1) / 3
        return 1 / t if t else float("inf")

    assert model_regime(lp, 4, r_for(g)) == DIVERGENT
    assert model_regime(lp, 4, r_for(g - ed * Fraction(3, 2))) == BAND
    assert model_regime(lp, 4, r_for(g - ed * 5)) == BOUNDED
    assert model_regime(lp, 4, r_for(g - ed / 2)) == UNSPECIFIED
    with pytest.raises(ValueError):
        model_regime(lp, 4, 2)


def test_lemma6_le_first_gamma():
    lp = lemma6_components(Lemma6Params(2, Fraction(1, 2), Fraction(1, 4)), 1)[0]
    assert lp.a == 1 and lp.b == 1 and lp.eps == Fraction(1, 3)
    assert lp.gamma == Surd.sqrt(2) - Fraction(1, 4)


def test_lemma6_le_identity_exact():
    dl, om = Fraction(2, 3), Fraction(1, 5)
    for n, lp in enumerate(lemma6_components(Lemma6Params(2, dl, om), 12), start=1):
        assert (lp.a, lp.b, lp.R) == (n, n * n, n ** n)
        assert Surd(n * om - n * n * dl) == lp.gamma - lp.eps_d * 3


@pytest.mark.parametrize("dl,om", [(Fraction(1), Fraction(0)), (Fraction(1, 2), Fraction(1, 4)),
                                   (Fraction(3, 4), Fraction(3, 4)), (Fraction(1, 3), Fraction(0))])
def test_lemma6_strict_membership_repaired(dl, om):
    comps = lemma6_components(Lemma6Params(2, dl, om, "<"), 20, eps_rule="repaired")
    assert len(comps) == 20
    for lp in comps:
        x = Surd(lp.a * om - lp.b * dl)
        assert lp.gamma - lp.eps_d * 2 < x < lp.gamma - lp.eps_d


def test_lemma6_strict_paper_rule_breaks_at_one():
    with pytest.raises(ValueError, match="n=1"):
        lemma6_components(Lemma6Params(2, 1, 0, "<"), 3, eps_rule="paper")


def test_lemma6_param_validation():
    with pytest.raises(ValueError):
        Lemma6Params(2, Fraction(1, 4), Fraction(1, 2))
    with pytest.raises(ValueError):
        Lemma6Params(2, 1, 0, "<<")


def test_combine_single_component_is_scaled_copy(two_points):
    out = combine([two_points])
    assert len(out) == 2
    assert np.array_equal(np.asarray(out.dist, dtype=object), np.asarray(two_points.dist, dtype=object))
    a = estimate(two_points, 2, 1, 2, budget=20, seed=0)
    b = estimate(out, 2, 1, 2, budget=20, seed=0)
    assert abs(float(a.lower) - float(b.lower)) < 1e-12


def test_combine_two_singletons():
    one = Space.build(["o"], [[0]], [1])
    out = combine([one, one])
    assert len(out) == 2
    assert out.dist[0, 1] == 2 + 2
    w = [float(x) for x in out.weights]
    assert w[1] >= 4 * w[0]
    mf = maximal_fn(Fn([1, 0]), out)
    total = float(out.weights[0] + out.weights[1])
    assert float(mf[0]) == 1
    assert abs(float(mf[1]) - float(out.weights[0]) / total) < 1e-15


def test_combine_scales_dominance():
    masses = [3, 1, 5, 2]
    c = combine_scales(masses)
    acc = 0
    for n, (cn, mu) in enumerate(zip(c, masses), start=1):
        if n > 1:
            assert float(cn) * mu >= 2 ** n * acc
        acc += float(cn) * mu


def test_combine_small_balls_stay_inside(worked_space, two_points):
    one = Space.build(["o"], [[0]], [1])
    out = combine([two_points, one, two_points])
    comp = [int(str(p).split(":")[0]) for p in out.points]
    for x, y in itertools.product(range(len(out)), repeat=2):
        if out.dist[x, y] <= 2 and x != y:
            assert comp[x] == comp[y]
        if comp[x] != comp[y]:
            assert out.dist[x, y] == 2 + max(comp[x], comp[y])


def test_combine_truncation_and_errors(two_points):
    out = combine([two_points, two_points, two_points], n_trunc=2)
    assert len(out) == 4
    with pytest.raises(ValueError):
        combine([two_points], n_trunc=2)


def test_components_json_roundtrip(worked_params, two_points):
    text = components_to_json([worked_params, two_points])
    comps, _ = components_from_json(text)
    assert comps[0].to_json() == worked_params.to_json()
    assert comps[1].to_json() == two_points.to_json()
