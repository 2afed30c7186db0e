from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phc_lab.geometry import (
    DEFAULT_TAPER,
    DesignError,
    HoleList,
    Nanobeam1DSpec,
    Outline,
    OverlapError,
    Phc2DSpec,
    design_rule_check,
    export_layout,
    generate_1d_holes,
    generate_2d_holes,
    import_layout,
    read_layout_csv,
    spec_from_dict,
)

GOLDEN = Path(__file__).parent / "golden"


def brute_force_drc(h: HoleList, min_gap: float, min_clearance: float) -> int:
    """Independent O(n^2) loop over hole pairs and outline edges."""
    bad = 0
    rows = [tuple(map(float, row)) for row in h.holes]
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            (x1, y1, r1), (x2, y2, r2) = rows[i], rows[j]
            if math.dist((x1, y1), (x2, y2)) - r1 - r2 < min_gap:
                bad += 1
    o = h.outline
    for x, y, r in rows:
        edges = [y - o.ymin, o.ymax - y] + ([] if o.open_x else [x - o.xmin, o.xmax - x])
        if min(edges) - r < min_clearance:
            bad += 1
    return bad


# ------------------------------------------------------------------ 1D


def test_innermost_gap_at_a_269():
    assert Nanobeam1DSpec(a=269).gaps()[0] == pytest.approx(225.96, abs=1e-12)


def test_taper_gaps_match_golden_file():
    with open(GOLDEN / "taper_gaps_a269.csv") as f:
        golden = list(csv.DictReader(f))
    gaps = Nanobeam1DSpec(a=269).gaps()[:6]
    assert len(golden) == 6
    for row, g in zip(golden, gaps):
        assert abs(g - float(row["gap_nm"])) <= 2 * math.ulp(g)


def test_hole_positions_are_cumulative_gaps_from_the_centre():
    spec = Nanobeam1DSpec(a=269, n_mirror=3)
    h = generate_1d_holes(spec)
    right = np.sort(h.x[h.x > 0])
    expected = np.cumsum([spec.gaps()[0] / 2] + spec.gaps()[1:])
    np.testing.assert_allclose(right, expected, rtol=0, atol=1e-9)
    np.testing.assert_allclose(np.diff(np.sort(h.x))[len(right) - 1], spec.gaps()[0], atol=1e-9)


def test_default_taper_accelerates_toward_the_mirror():
    seq = np.array(list(DEFAULT_TAPER) + [1.0]) * 269
    assert np.all(np.diff(seq, n=2) > 0)


@given(
    a=st.floats(184, 284),
    r=st.floats(20, 75),
    n_mirror=st.integers(0, 12),
)
@settings(max_examples=60, deadline=None)
def test_uncoupled_nanobeam_is_mirror_symmetric(a, r, n_mirror):
    spec = Nanobeam1DSpec(a=a, r=r, n_mirror=n_mirror)
    if 2 * r >= a * min(spec.taper_coeffs):
        with pytest.raises(OverlapError):
            generate_1d_holes(spec)
        return
    h = generate_1d_holes(spec)
    mirrored = h.holes * np.array([-1, 1, 1])
    key = lambda arr: arr[np.lexsort((arr[:, 1], arr[:, 0]))]  # noqa: E731
    np.testing.assert_array_equal(key(h.holes), key(mirrored))


def test_coupled_nanobeam_drops_nine_holes_on_one_side():
    open_ = generate_1d_holes(Nanobeam1DSpec(a=255))
    coupled = generate_1d_holes(Nanobeam1DSpec(a=255, waveguide_coupled=True))
    assert len(open_) - len(coupled) == 9
    assert (coupled.x > 0).sum() == (open_.x > 0).sum() - 9


@given(st.floats(0.8, 1.18))
@settings(max_examples=30)
def test_scaling_a_scales_every_coordinate(s):
    h1 = generate_1d_holes(Nanobeam1DSpec(a=240))
    h2 = generate_1d_holes(Nanobeam1DSpec(a=240 * s))
    np.testing.assert_allclose(h2.x, s * h1.x, rtol=1e-12, atol=1e-9)
    np.testing.assert_array_equal(h2.r, h1.r)


@pytest.mark.parametrize(
    "kw, word",
    [
        ({"a": 184, "r": 200}, "2r < a*min"),
        ({"r": 190, "a": 600}, "2r < w"),
        ({"taper_coeffs": (0.9, 0.85, 0.95, 0.96, 0.97, 0.98)}, "strictly increasing"),
        ({"taper_coeffs": (0.9, 0.95, 0.99, 1.0, 1.01, 1.02)}, "<= 1"),
    ],
)
def test_invalid_nanobeam_names_the_violated_constraint(kw, word):
    with pytest.raises(DesignError, match=word.replace("*", r"\*")):
        generate_1d_holes(Nanobeam1DSpec(**kw))


# ------------------------------------------------------------------ 2D


def row_one_holes(h: HoleList, a: float) -> np.ndarray:
    pitch = a * np.sqrt(3) / 2
    sel = np.abs(np.abs(h.y) - pitch) < a / 4
    return h.holes[sel]


def test_second_shift_is_three_quarters_of_b1():
    assert Phc2DSpec(b1=10.1).shifts()[1] == pytest.approx(7.575, abs=1e-12)


def test_row_one_holes_move_outward_by_the_shift_profile():
    spec = Phc2DSpec()
    h = generate_2d_holes(spec)
    pitch = spec.a * np.sqrt(3) / 2
    rows = row_one_holes(h, spec.a)
    for x, y, _ in rows:
        k = int(round(abs(x) / spec.a - 0.5))
        expected = spec.shifts()[k] if k < 4 else 0.0
        assert abs(y) - pitch == pytest.approx(expected, abs=1e-9)


def test_2d_layout_is_symmetric_in_x_and_y():
    h = generate_2d_holes(Phc2DSpec())
    key = lambda arr: np.round(arr[np.lexsort((arr[:, 1], arr[:, 0]))], 9)  # noqa: E731
    for flip in ([-1, 1, 1], [1, -1, 1]):
        np.testing.assert_array_equal(key(h.holes), key(h.holes * np.array(flip)))


def test_zero_radius_lattice_has_nearest_neighbour_a():
    h = generate_2d_holes(Phc2DSpec(r=0.0, b1=0.0))
    xy = h.holes[:, :2]
    d = np.hypot(*(xy[:, None, :] - xy[None, :, :]).transpose(2, 0, 1))
    d[np.diag_indices_from(d)] = np.inf
    assert d.min() == pytest.approx(252.0, rel=1e-14)
    assert np.all(h.r == 0)


def test_zero_shift_is_the_plain_line_defect():
    plain = generate_2d_holes(Phc2DSpec(b1=0.0))
    other_profile = generate_2d_holes(Phc2DSpec(b1=0.0, shift_ratios=(1.0, 0.5)))
    np.testing.assert_array_equal(plain.holes, other_profile.holes)
    # independent lattice construction: rows j != 0, odd rows offset by a/2
    a, pitch = 252.0, 252.0 * np.sqrt(3) / 2
    sites = []
    for j in range(-7, 8):
        if j == 0:
            continue
        cols = np.arange(-12, 13) if j % 2 == 0 else np.arange(-13, 13) + 0.5
        sites += [(m * a, j * pitch) for m in cols]
    sites = np.array(sorted(sites))
    got = np.array(sorted(map(tuple, plain.holes[:, :2])))
    np.testing.assert_allclose(got, sites, atol=1e-9)


def test_2d_spec_validation():
    with pytest.raises(OverlapError):
        generate_2d_holes(Phc2DSpec(a=120, r=65))
    with pytest.raises(DesignError, match="shift_ratios"):
        generate_2d_holes(Phc2DSpec(shift_ratios=(0.9, 0.5)))
    with pytest.raises(DesignError, match="shift_ratios"):
        generate_2d_holes(Phc2DSpec(shift_ratios=(1.0, 0.5, 0.6)))


# ------------------------------------------------------------------ DRC


def test_valid_design_passes_drc_and_agrees_with_brute_force():
    h = generate_1d_holes(Nanobeam1DSpec(a=269))
    assert design_rule_check(h, 20, 20) == []
    assert brute_force_drc(h, 20, 20) == 0


@pytest.mark.parametrize("a", np.linspace(184, 284, 11))
def test_drc_passes_across_the_1d_lattice_range(a):
    h = generate_1d_holes(Nanobeam1DSpec(a=float(a)))
    assert design_rule_check(h) == []


@pytest.mark.parametrize("a", np.linspace(236, 269, 7))
def test_drc_passes_across_the_2d_lattice_range(a):
    h = generate_2d_holes(Phc2DSpec(a=float(a)))
    assert design_rule_check(h) == []


def test_coincident_holes_give_one_gap_violation():
    h = HoleList(np.array([[0, 0, 50], [0, 0, 50]]), Outline(-500, 500, -500, 500))
    v = design_rule_check(h)
    assert [x.kind for x in v] == ["gap"]
    assert v[0].holes == (0, 1)


def test_hole_on_the_outline_edge_gives_one_clearance_violation():
    h = HoleList(np.array([[0, 185, 50]]), Outline(-500, 500, -185, 185, open_x=True))
    v = design_rule_check(h)
    assert [x.kind for x in v] == ["clearance"]


@given(
    st.lists(st.tuples(st.floats(-400, 400), st.floats(-150, 150), st.floats(5, 80)), min_size=0, max_size=12),
    st.floats(0, 40),
)
@settings(max_examples=80)
def test_drc_count_matches_brute_force(holes, min_gap):
    h = HoleList(np.array(holes).reshape(-1, 3), Outline(-500, 500, -185, 185, open_x=True))
    assert len(design_rule_check(h, min_gap, 20)) == brute_force_drc(h, min_gap, 20)


# ------------------------------------------------------------------ export


def test_empty_layout_csv_is_header_only():
    h = HoleList(np.zeros((0, 3)), Outline(0, 1, 0, 1))
    assert export_layout(h, "csv") == b"x_nm,y_nm,r_nm\n"


def test_single_hole_csv():
    h = HoleList(np.array([[0.0, 0.0, 65.0]]), Outline(-100, 100, -100, 100))
    assert export_layout(h, "csv") == b"x_nm,y_nm,r_nm\n0,0,65\n"


@pytest.mark.parametrize("spec", [Nanobeam1DSpec(), Nanobeam1DSpec(a=255, waveguide_coupled=True), Phc2DSpec()])
def test_json_round_trip_is_byte_identical(spec):
    h = generate_1d_holes(spec) if isinstance(spec, Nanobeam1DSpec) else generate_2d_holes(spec)
    data = export_layout(h, "json")
    again = import_layout(data)
    assert export_layout(again, "json") == data
    assert json.loads(data)["schema_version"] == 1
    assert spec_from_dict(json.loads(data)["spec"]) == spec


def test_csv_round_trip_is_exact():
    h = generate_2d_holes(Phc2DSpec())
    np.testing.assert_array_equal(read_layout_csv(export_layout(h, "csv")), h.holes)


def test_unknown_schema_version_is_rejected():
    data = json.loads(export_layout(generate_1d_holes(Nanobeam1DSpec()), "json"))
    data["schema_version"] = 2
    with pytest.raises(ValueError, match="schema_version"):
        import_layout(json.dumps(data))


def test_unknown_export_format():
    with pytest.raises(ValueError):
        export_layout(generate_1d_holes(Nanobeam1DSpec()), "gds")
