"""Embedded comparison table of suspended photonic-crystal cavities.

Rows are immutable records of published devices: visible and telecom
diamond cavities plus visible-wavelength cavities in other low-loss
materials.  Rows from this work are flagged and kept out of the ranking
baseline so a new Q value is always compared against prior art.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Any

VISIBLE_MAX_NM = 1000.0


@dataclass(frozen=True)
class LiteratureRow:
    cavity_type: str  # "1D" or "2D"
    material: str
    wavelength_nm: float
    q: tuple[float, ...]  # loaded / intrinsic pairs keep both values
    v: float | None  # (lambda/n)^3
    method: str
    reference: str
    this_work: bool = False
    v_approx: bool = False
    note: str = ""

    @property
    def q_best(self) -> float:
        return max(self.q)

    @property
    def visible(self) -> bool:
        return self.wavelength_nm < VISIBLE_MAX_NM

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["q"] = list(self.q)
        return d


TABLE: tuple[LiteratureRow, ...] = (
    LiteratureRow("1D", "diamond", 737, (8.3e4, 1.8e5), 0.5, "Thin film", "This work", this_work=True),
    LiteratureRow("1D", "diamond", 637, (1.4e4,), 1.0, "Quasi-isotropic etching", "Mouradian", v_approx=True),
    LiteratureRow("1D", "diamond", 737, (2.0e4,), 0.5, "Angle etching", "Bhaskar"),
    LiteratureRow("1D", "diamond", 660, (2.4e4,), 0.5, "Photoelectrochemical etching", "Lee"),
    LiteratureRow("1D", "diamond", 1529, (1.8e5, 2.7e5), 0.57, "Angle etching", "Burek", note="telecom"),
    LiteratureRow("1D", "SiN", 780, (1.1e5,), 0.4, "Thin film", "Samutpraphoot"),
    LiteratureRow("1D", "AlN", 403, (6.9e3,), 1.6, "Thin film", "Sergent"),
    LiteratureRow("1D", "4H-SiC", 700, (7e3,), 0.5, "Photoelectrochemical etching", "Bracher"),
    LiteratureRow("1D", "GaP", 744, (3.0e4,), 1.0, "Monolithic", "Chakravarthi", v_approx=True),
    LiteratureRow("1D", "InGaP", 841, (2.1e4,), 0.64, "Monolithic", "Saber"),
    LiteratureRow(
        "2D",
        "diamond",
        746,
        (1.6e5,),
        2.18,
        "Thin film",
        "This work",
        this_work=True,
        note="mode volume also stated as 2.9 (lambda/n)^3 for the same design; both values kept",
    ),
    LiteratureRow("2D", "diamond", 645, (8e3,), 0.35, "FIB", "Jung"),
    LiteratureRow("2D", "diamond", 1470, (1.8e3,), 2.15, "Thin film", "Kuruma", note="telecom"),
)

# the alternative 2D mode volume recorded alongside the table entry
V_2D_ALTERNATIVE = 2.9


def prior_rows(
    table: tuple[LiteratureRow, ...] = TABLE,
    visible_only: bool = False,
    cavity_type: str | None = None,
    material: str | None = None,
) -> list[LiteratureRow]:
    return [
        r
        for r in table
        if not r.this_work
        and (r.visible or not visible_only)
        and (cavity_type is None or r.cavity_type == cavity_type)
        and (material is None or r.material == material)
    ]


@dataclass(frozen=True)
class Ranking:
    label: str
    q: float
    rank: int  # 1 = highest Q among the compared rows plus this entry
    out_of: int
    above: tuple[str, ...]  # references ranked below the entry
    below: tuple[str, ...]  # references ranked above the entry

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["above"], d["below"] = list(self.above), list(self.below)
        return d


def rank_q(q: float, label: str = "entry", rows: list[LiteratureRow] | None = None) -> Ranking:
    """Place ``q`` among ``rows`` (default: all visible prior rows) by best Q.

    Ties rank the new entry below the existing row.
    """
    if not q > 0:
        raise ValueError("Q must be > 0")
    rows = prior_rows(visible_only=True) if rows is None else rows
    ordered = sorted(rows, key=lambda r: (-r.q_best, r.reference))
    higher = [r for r in ordered if r.q_best >= q]
    lower = [r for r in ordered if r.q_best < q]
    tag = lambda r: f"{r.reference} ({r.cavity_type}, {r.material}, {r.wavelength_nm:g} nm)"  # noqa: E731
    return Ranking(label, float(q), len(higher) + 1, len(rows) + 1, tuple(map(tag, lower)), tuple(map(tag, higher)))


def improvement_ratios(q: float, rows: list[LiteratureRow]) -> dict[str, float]:
    """``q`` divided by each row's best Q, keyed by reference."""
    return {r.reference: q / r.q_best for r in rows}


def table_json(table: tuple[LiteratureRow, ...] = TABLE) -> str:
    return json.dumps([r.to_dict() for r in table], indent=1, sort_keys=True) + "\n"


def table_csv(table: tuple[LiteratureRow, ...] = TABLE) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cavity_type", "material", "wavelength_nm", "q", "v_lambda_over_n3", "method", "reference", "this_work", "note"])
    for r in table:
        v = "" if r.v is None else (f"~{r.v:g}" if r.v_approx else f"{r.v:g}")
        q = "/".join(f"{x:.3g}" for x in r.q)
        w.writerow([r.cavity_type, r.material, f"{r.wavelength_nm:g}", q, v, r.method, r.reference, int(r.this_work), r.note])
    return buf.getvalue()


def q_series_csv(entries: list[tuple[str, float]], table: tuple[LiteratureRow, ...] = TABLE) -> str:
    """Plot-ready ``label,q,this_work`` series: user entries then prior rows, by Q."""
    rows = [(label, float(q), 1) for label, q in entries]
    rows += [(f"{r.reference} {r.cavity_type} {r.material} {r.wavelength_nm:g} nm", r.q_best, 0) for r in prior_rows(table)]
    rows.sort(key=lambda t: (-t[1], t[0]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "q", "this_work"])
    for label, q, flag in rows:
        w.writerow([label, repr(q), flag])
    return buf.getvalue()
