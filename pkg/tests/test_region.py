from fractions import Fraction as Fr

import numpy as np
import pytest

from lorentzlab.region import (
    UNKNOWN, RegionMap, RegionScanner, RegionSpec, RegionSpecError, axioms_check,
    check_line, emit, enumerate_outside, finite_subcover, scan, separating_line,
)
from lorentzlab.composite import Surd

IDENT = RegionSpec.identity()
KINKED = RegionSpec(0, [(0, 0), (Fr(1, 2), Fr(1, 3)), (1, Fr(1, 2))])


def test_spec_validation():
    with pytest.raises(RegionSpecError, match="concave"):
        RegionSpec(0, [(0, 0), (Fr(1, 2), Fr(1, 8)), (1, 1)])
    with pytest.raises(RegionSpecError):
        RegionSpec(0, [(0, 0), (1, Fr(3, 2))])
    with pytest.raises(RegionSpecError):
        RegionSpec(Fr(1, 2), [(0, 0), (1, 1)])
    with pytest.raises(RegionSpecError):
        RegionSpec(0, [(0, Fr(1, 2)), (1, Fr(1, 4))])


def test_spec_json_roundtrip():
    for s in (IDENT, KINKED, RegionSpec.identity(1)):
        assert RegionSpec.from_json(s.to_json()) == s


def test_separating_line_identity():
    P = (Fr(1, 2), Fr(3, 4))
    lp = separating_line(IDENT, P)
    assert (lp.a, lp.b) == (1, 1)
    assert lp.gamma == Surd(Fr(1, 4))
    # widest margin: 3 eps d equals the vertical gap to the diagonal, up to the rounding of d
    assert abs(float(lp.eps_d * 3) - 0.25) < 1e-9
    assert check_line(IDENT, lp, P) == {"through_point": True, "margin_ok": True}


def test_separating_line_margin_brute_force():
    P = (Fr(1, 2), Fr(3, 4))
    lp = separating_line(IDENT, P)
    g = np.linspace(0, 1, 401)
    u, w = np.meshgrid(g, g)
    band = lp.a * w - lp.b * u > float(lp.gamma - lp.eps_d * 3) + 1e-12
    inside = w <= u
    assert not np.any(band & inside)


def test_separating_line_flat_region():
    zero = RegionSpec(0, [(0, 0), (1, 0)])
    P = (Fr(1, 2), Fr(1, 2))
    lp = separating_line(zero, P)
    assert lp.a >= 1
    assert check_line(zero, lp, P) == {"through_point": True, "margin_ok": True}


def test_separating_line_rejects_graph_and_interior():
    with pytest.raises(ValueError, match="graph"):
        separating_line(IDENT, (Fr(1, 2), Fr(1, 2)))
    with pytest.raises(ValueError):
        separating_line(IDENT, (Fr(1, 2), Fr(1, 4)))


def test_separating_line_replay_random():
    rng = np.random.default_rng(5)
    for spec in (IDENT, KINKED):
        for _ in range(30):
            u = Fr(int(rng.integers(0, 17)), 16)
            w = Fr(int(rng.integers(0, 17)), 16)
            if not spec.outside_closure(u, w):
                continue
            lp = separating_line(spec, (u, w))
            assert check_line(spec, lp, (u, w)) == {"through_point": True, "margin_ok": True}


def test_enumerate_outside():
    assert set(enumerate_outside(IDENT, 2)) == {(0, Fr(1, 2)), (0, 1), (Fr(1, 2), 1)}
    assert enumerate_outside(IDENT, 1) == [(0, 1)]
    with pytest.raises(ValueError):
        enumerate_outside(IDENT, 0)


def test_finite_subcover():
    assert len(finite_subcover(IDENT, 3)) <= 3
    assert finite_subcover(RegionSpec.identity(1), 4) == [1]
    sizes = [len(finite_subcover(KINKED, n)) for n in range(1, 7)]
    assert sizes == sorted(sizes)
    for n in range(1, 7):
        assert all(0 <= u <= 1 for u in finite_subcover(KINKED, n))


def test_scan_identity_y_variant():
    m = scan(IDENT, "Y-closed", 8, 3)
    assert axioms_check(m) == []
    for (i, j), c in m.cells.items():
        if j < i:
            assert c == "BOUNDED"
        elif j > i:
            assert c == "UNBOUNDED"
        else:
            assert c == UNKNOWN


def test_scan_z_variant_graph_unbounded():
    m = scan(IDENT, "Z-open", 8, 3)
    assert all(m.cells[(i, i)] == "UNBOUNDED" for i in range(9))
    assert axioms_check(m) == []


def test_scan_kinked_passes_axioms():
    for variant in ("Y-closed", "Z-open"):
        assert axioms_check(scan(KINKED, variant, 8, 3)) == []


def test_axioms_detect_injected_faults():
    m = scan(IDENT, "Y-closed", 8, 3)
    m.cells[(2, 6)] = "BOUNDED"
    kinds = {v["axiom"] for v in axioms_check(m)}
    assert "diagonal" in kinds or "upward-closure" in kinds
    m = scan(IDENT, "Y-closed", 8, 3)
    m.cells[(6, 2)] = "UNBOUNDED"
    assert any(v["axiom"] == "convexity" for v in axioms_check(m))


def test_emit_formats_and_determinism():
    m = scan(IDENT, "Y-closed", 2, 2)
    csv_text = emit(m, "csv").decode()
    assert len(csv_text.strip().splitlines()) == 1 + 9
    assert emit(m, "svg") == emit(scan(IDENT, "Y-closed", 2, 2), "svg")
    assert emit(m, "json") == emit(scan(IDENT, "Y-closed", 2, 2), "json")
    empty = RegionMap(grid=0, variant="Y-closed")
    assert emit(empty, "csv").decode().strip() == "u,w,class,provenance,depth"
    assert b"<svg" in emit(empty, "svg")
    with pytest.raises(ValueError):
        emit(m, "png")


def test_region_scanner_api():
    sc = RegionScanner(grid=4, depth=2).fit(IDENT)
    assert sc.violations_ == []
    assert list(sc.predict([(1, 0), (0, 1)])) == ["BOUNDED", "UNBOUNDED"]
    assert sc.get_params()["grid"] == 4
