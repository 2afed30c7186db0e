from __future__ import annotations

import csv
import dataclasses
import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from phc_lab.literature import (
    TABLE,
    V_2D_ALTERNATIVE,
    improvement_ratios,
    prior_rows,
    q_series_csv,
    rank_q,
    table_csv,
    table_json,
)


def test_rows_are_immutable():
    with pytest.raises(dataclasses.FrozenInstanceError):
        TABLE[0].q = (1.0,)


def test_this_work_rows_are_flagged_and_excluded_from_prior_art():
    mine = [r for r in TABLE if r.this_work]
    assert {(r.cavity_type, r.q_best) for r in mine} == {("1D", 1.8e5), ("2D", 1.6e5)}
    assert not any(r.this_work for r in prior_rows())


def test_both_2d_mode_volumes_are_kept():
    row = next(r for r in TABLE if r.this_work and r.cavity_type == "2D")
    assert row.v == 2.18 and V_2D_ALTERNATIVE == 2.9
    assert "2.9" in row.note


def test_visible_filter_drops_telecom_rows():
    refs = {r.reference for r in prior_rows(visible_only=True)}
    assert "Burek" not in refs and "Kuruma" not in refs
    assert len(refs) == 9


def test_highest_this_work_q_ranks_first_among_visible_rows():
    r = rank_q(1.8e5, "1D")
    assert r.rank == 1 and r.out_of == 10 and not r.below


def test_q_below_every_row_ranks_last():
    r = rank_q(10.0)
    assert r.rank == r.out_of and not r.above


@given(st.floats(1.0, 1e7))
def test_rank_is_monotone_in_q(q):
    assert rank_q(2 * q).rank <= rank_q(q).rank
    r = rank_q(q)
    assert len(r.above) + len(r.below) + 1 == r.out_of


def test_tie_ranks_the_entry_below_the_existing_row():
    assert rank_q(1.1e5).rank == 2


def test_rank_domain():
    with pytest.raises(ValueError):
        rank_q(0.0)


def test_2d_improvement_over_prior_2d_diamond_is_20_to_100_fold():
    ratios = improvement_ratios(1.6e5, prior_rows(cavity_type="2D", material="diamond"))
    assert ratios == pytest.approx({"Jung": 20.0, "Kuruma": 1.6e5 / 1.8e3})
    assert 20 <= min(ratios.values()) and max(ratios.values()) <= 100


def test_table_dumps():
    rows = json.loads(table_json())
    assert len(rows) == len(TABLE)
    assert rows[0]["q"] == [8.3e4, 1.8e5]
    lines = list(csv.reader(io.StringIO(table_csv())))
    assert lines[0][:4] == ["cavity_type", "material", "wavelength_nm", "q"]
    assert lines[1][3] == "8.3e+04/1.8e+05"
    assert any(row[4] == "~1" for row in lines[1:])  # approximate volumes keep their marker


def test_q_series_is_sorted_and_flags_entries():
    rows = list(csv.DictReader(io.StringIO(q_series_csv([("mine", 5e4)]))))
    qs = [float(r["q"]) for r in rows]
    assert qs == sorted(qs, reverse=True)
    assert [r["label"] for r in rows if r["this_work"] == "1"] == ["mine"]
    assert len(rows) == len(prior_rows()) + 1
