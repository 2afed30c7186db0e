"""``phc-lab``: batch entry point from design to report.

Every command reads a strict JSON config (``schema_version`` 1, unknown
fields rejected), writes its outputs into ``--out`` and refuses to replace
existing files unless ``--force`` is given.  Outputs carry no timestamps,
so reruns with the same config and seed are byte-identical.

Exit codes: 0 success, 1 config or input error, 2 design-rule failure,
3 solver divergence, 4 fit did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import geometry as geo
from .bands2d import pwe_bands
from .cavity import CavitySettings, simulate_cavity
from .cqed import CQED_INPUTS, build_cqed_report
from .disorder import DEFAULT_ALPHA, Baseline, DisorderModel, YieldCriteria, yield_study
from .fdtd2d import DivergenceError, eps_snapshot
from .literature import TABLE, improvement_ratios, prior_rows, q_series_csv, rank_q, table_csv, table_json
from .specfit.data import Spectrum, TimeTrace
from .specfit.fits import fit_exponential_lifetime, fit_g2, fit_lorentzian_peak, fit_reflection_dip
from .units import N_DIAMOND
from .validation import pulse_speed_check
from .wave1d import slab_neff

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_DRC, EXIT_DIVERGED, EXIT_NOT_CONVERGED = 0, 1, 2, 3, 4

log = logging.getLogger("phc_lab")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Field:
    default: Any
    kind: str  # float, int, bool, str, path, floats, dict, entries, design
    unit: str
    help: str
    choices: tuple[str, ...] = ()
    optional: bool = False  # null allowed


REQUIRED = object()

DESIGN_FIELDS: dict[str, Field] = {
    "kind": Field("1d", "str", "", "nanobeam ('1d') or line-defect slab cavity ('2d')", ("1d", "2d")),
    "a_nm": Field(None, "float", "nm", "lattice constant (default 269 for 1d, 252 for 2d)", optional=True),
    "r_nm": Field(65.0, "float", "nm", "hole radius"),
    "d_nm": Field(160.0, "float", "nm", "film thickness"),
    "w_nm": Field(370.0, "float", "nm", "beam width (1d)"),
    "taper_coeffs": Field(list(geo.DEFAULT_TAPER), "floats", "a", "lattice taper a1..a6 over a (1d)"),
    "n_mirror": Field(10, "int", "", "mirror periods per side (1d)"),
    "waveguide_coupled": Field(False, "bool", "", "drop outer holes on +x for a coupling waveguide (1d)"),
    "holes_removed": Field(9, "int", "", "holes dropped when waveguide_coupled (1d)"),
    "b1_nm": Field(10.1, "float", "nm", "outward shift of the innermost row-1 hole (2d)"),
    "shift_ratios": Field(list(geo.DEFAULT_SHIFT_RATIOS), "floats", "b1", "row-1 shifts over b1 (2d)"),
    "n_rows": Field(7, "int", "", "hole rows per side of the line defect (2d)"),
    "n_cols": Field(12, "int", "", "lattice periods per side of the centre (2d)"),
    "min_gap_nm": Field(20.0, "float", "nm", "design rule: minimum hole-to-hole edge gap"),
    "min_clearance_nm": Field(20.0, "float", "nm", "design rule: minimum hole-to-outline clearance"),
}

SIM_FIELDS: dict[str, Field] = {
    "center_nm": Field(737.0, "float", "nm", "centre of the analysed band"),
    "span": Field(0.15, "float", "fraction", "half-width of the band relative to the centre frequency"),
    "dx_nm": Field(None, "float", "nm", "cell size (default: smallest hole radius / 4)", optional=True),
    "steps": Field(20000, "int", "steps", "time steps per FDTD pass"),
    "padding_nm": Field(500.0, "float", "nm", "air padding around the outline"),
    "courant": Field(0.5, "float", "", "Courant number relative to the 2D limit"),
    "pml_cells": Field(12, "int", "cells", "absorbing layer thickness"),
    "subsample": Field(4, "int", "", "sub-cell samples per axis for permittivity averaging"),
}

SEED_FIELD = {"seed": Field(0, "int", "", "random seed (overridden by --seed)")}

COMMAND_FIELDS: dict[str, dict[str, Field]] = {
    "design": {**DESIGN_FIELDS},
    "simulate": {
        "layout": Field(None, "path", "", "layout JSON from `design` (relative to the config file)", optional=True),
        "design": Field(None, "design", "", "inline design record, used when no layout is given", optional=True),
        **SIM_FIELDS,
        "compute_volume": Field(True, "bool", "", "run the second pass for |E|^2 and mode volume"),
        "vacuum_check": Field(False, "bool", "", "embed a vacuum pulse-speed check in the summary"),
    },
    "bands": {
        "a_nm": Field(252.0, "float", "nm", "lattice constant"),
        "r_nm": Field(65.0, "float", "nm", "hole radius"),
        "d_nm": Field(160.0, "float", "nm", "film thickness (sets n_eff)"),
        "n_eff": Field(None, "float", "", "effective index (default: slab TE0 index)", optional=True),
        "wavelength_nm": Field(737.0, "float", "nm", "design wavelength for n_eff and the design point a/lambda"),
        "n_pw": Field(11, "int", "", "plane-wave grid size (odd)"),
        "n_bands": Field(8, "int", "", "bands to compute"),
        "points_per_segment": Field(30, "int", "", "k points per path segment"),
    },
    "fit": {
        "model": Field(REQUIRED, "str", "", "fit model", ("lorentzian", "dip", "lifetime", "g2")),
        "data": Field(REQUIRED, "path", "", "data CSV (relative to the config file)"),
        "guess": Field({}, "dict", "", "initial parameter guesses by name"),
        "t_start_ns": Field(None, "float", "ns", "lifetime fit window start", optional=True),
        "threshold": Field(0.5, "float", "", "single-emitter g2(0) threshold"),
        "axis_offset_ghz": Field(0.0, "float", "GHz", "offset added to a relative dip axis"),
    },
    "cqed": {
        **{k: Field(d, "float", u, h) for k, (d, u, h) in CQED_INPUTS.items()},
        "use_tau_bulk": Field(False, "bool", "", "use the unpatterned-film lifetime as reference"),
    },
    "yield": {
        "layout": Field(None, "path", "", "layout JSON from `design` (relative to the config file)", optional=True),
        "design": Field(None, "design", "", "inline design record, used when no layout is given", optional=True),
        **SIM_FIELDS,
        "sigma_r_nm": Field(0.0, "float", "nm", "hole radius jitter"),
        "sigma_xy_nm": Field(0.0, "float", "nm", "hole position jitter per axis"),
        "sigma_d_nm": Field(1.0, "float", "nm", "film thickness jitter"),
        "n_samples": Field(100, "int", "", "Monte Carlo samples"),
        "q_threshold": Field(2.0e4, "float", "", "Q criterion"),
        "wavelength_tol_percent": Field(2.9, "float", "%", "resonance-match criterion"),
        "alpha": Field(DEFAULT_ALPHA, "float", "", "disorder-loss coefficient"),
        "q_base": Field(None, "float", "", "undisordered Q (default: simulated baseline Q)", optional=True),
        **SEED_FIELD,
    },
    "report": {
        "entries": Field(
            [
                {"label": "1D diamond, this work", "q": 1.8e5, "wavelength_nm": 737.0, "cavity_type": "1D", "material": "diamond"},
                {"label": "2D diamond, this work", "q": 1.6e5, "wavelength_nm": 746.0, "cavity_type": "2D", "material": "diamond"},
            ],
            "entries",
            "",
            "Q values to place against the table: label, q, wavelength_nm (nm), cavity_type, material",
        ),
        "cqed": Field({}, "dict", "", "overrides of the cqed inputs (see `cqed --help`)"),
        "use_tau_bulk": Field(False, "bool", "", "use the unpatterned-film lifetime as reference"),
    },
    "table": {},
}
for _f in ("design", "simulate", "bands", "fit", "cqed", "report", "table"):
    COMMAND_FIELDS[_f] = {**COMMAND_FIELDS[_f], **SEED_FIELD}

ENTRY_KEYS = {"label": str, "q": float, "wavelength_nm": float, "cavity_type": str, "material": str}

OUTPUTS: dict[str, tuple[str, ...]] = {
    "design": ("layout.json", "layout.csv", "drc.json"),
    "simulate": ("summary.json", "trace_0.csv", "trace_1.csv", "mode_E2.fsnp", "eps.fsnp"),
    "bands": ("bands.csv", "bands.json"),
    "fit": ("fit.json",),
    "cqed": ("cqed.json", "cqed.txt"),
    "yield": ("yield.json", "yield_records.csv", "yield.txt"),
    "report": ("report.json", "report.txt", "q_series.csv"),
    "table": ("table.json", "table.csv"),
}


# ---------------------------------------------------------------- config


def _reject_duplicates(pairs):
    d = {}
    for k, v in pairs:
        if k in d:
            raise ConfigError(f"duplicate field {k!r}")
        d[k] = v
    return d


def _check_value(name: str, f: Field, v: Any) -> Any:
    def bad(what):
        return ConfigError(f"field {name!r}: expected {what}, got {v!r}")

    if v is None:
        if f.optional:
            return None
        raise bad(f.kind)
    num = isinstance(v, (int, float)) and not isinstance(v, bool)
    if f.kind == "float":
        if not num or not np.isfinite(v):
            raise bad("a finite number")
        return float(v)
    if f.kind == "int":
        if not isinstance(v, int) or isinstance(v, bool):
            raise bad("an integer")
        return v
    if f.kind == "bool":
        if not isinstance(v, bool):
            raise bad("true or false")
        return v
    if f.kind in ("str", "path"):
        if not isinstance(v, str):
            raise bad("a string")
        if f.choices and v not in f.choices:
            raise bad(f"one of {list(f.choices)}")
        return v
    if f.kind == "floats":
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            raise bad("a list of numbers")
        return [float(x) for x in v]
    if f.kind == "dict":
        if not isinstance(v, dict):
            raise bad("an object")
        return v
    if f.kind == "design":
        if not isinstance(v, dict):
            raise bad("an object")
        return _validate(v, DESIGN_FIELDS, f"{name}.")
    if f.kind == "entries":
        if not isinstance(v, list):
            raise bad("a list of objects")
        out = []
        for i, e in enumerate(v):
            if not isinstance(e, dict) or set(e) != set(ENTRY_KEYS):
                raise ConfigError(f"field {name}[{i}]: expected exactly the keys {sorted(ENTRY_KEYS)}")
            for k, t in ENTRY_KEYS.items():
                sub = Field(None, "float" if t is float else "str", "", "")
                e = {**e, k: _check_value(f"{name}[{i}].{k}", sub, e[k])}
            out.append(e)
        return out
    raise AssertionError(f.kind)


def _validate(raw: dict[str, Any], fields: dict[str, Field], prefix: str = "") -> dict[str, Any]:
    unknown = sorted(set(raw) - set(fields))
    if unknown:
        raise ConfigError(f"unknown field {prefix}{unknown[0]!r}")
    out = {}
    for name, f in fields.items():
        if name in raw:
            out[name] = _check_value(prefix + name, f, raw[name])
        elif f.default is REQUIRED:
            raise ConfigError(f"missing required field {prefix}{name!r}")
        else:
            out[name] = json.loads(json.dumps(f.default))
    return out


def load_config(command: str, path: str | None) -> tuple[dict[str, Any], Path]:
    """Validated config for ``command`` and the directory relative paths resolve against."""
    fields = COMMAND_FIELDS[command]
    if path is None:
        return _validate({}, fields), Path.cwd()
    p = Path(path)
    try:
        raw = json.loads(p.read_text(), object_pairs_hook=_reject_duplicates)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    if "schema_version" not in raw:
        raise ConfigError("missing required field 'schema_version'")
    if raw.pop("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"field 'schema_version': only version {SCHEMA_VERSION} is supported")
    return _validate(raw, fields), p.parent


def design_spec(c: dict[str, Any]) -> geo.Nanobeam1DSpec | geo.Phc2DSpec:
    if c["kind"] == "1d":
        return geo.Nanobeam1DSpec(
            a=269.0 if c["a_nm"] is None else c["a_nm"],
            r=c["r_nm"],
            w=c["w_nm"],
            d=c["d_nm"],
            taper_coeffs=tuple(c["taper_coeffs"]),
            n_mirror=c["n_mirror"],
            waveguide_coupled=c["waveguide_coupled"],
            holes_removed=c["holes_removed"],
        )
    return geo.Phc2DSpec(
        a=252.0 if c["a_nm"] is None else c["a_nm"],
        r=c["r_nm"],
        d=c["d_nm"],
        b1=c["b1_nm"],
        shift_ratios=tuple(c["shift_ratios"]),
        n_rows=c["n_rows"],
        n_cols=c["n_cols"],
    )


def generate(c: dict[str, Any]) -> geo.HoleList:
    spec = design_spec(c)
    return geo.generate_1d_holes(spec) if c["kind"] == "1d" else geo.generate_2d_holes(spec)


def _layout_from(c: dict[str, Any], base: Path) -> geo.HoleList:
    if c["layout"] is not None:
        p = Path(c["layout"])
        p = p if p.is_absolute() else base / p
        try:
            return geo.import_layout(p.read_bytes())
        except OSError as e:
            raise ConfigError(f"cannot read layout {p}: {e.strerror}") from e
        except (ValueError, KeyError, TypeError) as e:
            raise ConfigError(f"layout {p} is malformed: {e}") from e
    if c["design"] is not None:
        return generate(c["design"])
    raise ConfigError("field 'layout': give a layout path or an inline 'design'")


def _settings(c: dict[str, Any], **extra) -> CavitySettings:
    s = CavitySettings(**{k: c[k] for k in SIM_FIELDS}, **extra)
    s.validate()
    return s


# ---------------------------------------------------------------- output


class Output:
    def __init__(self, directory: Path, force: bool):
        self.dir = directory
        self.force = force

    def claim(self, names: tuple[str, ...]) -> None:
        if self.force:
            return
        clash = [n for n in names if (self.dir / n).exists()]
        if clash:
            raise ConfigError(f"{self.dir / clash[0]} exists; pass --force to overwrite")

    def write(self, name: str, data: str | bytes) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / name
        if p.exists() and not self.force:
            raise ConfigError(f"{p} exists; pass --force to overwrite")
        p.write_bytes(data.encode() if isinstance(data, str) else data)
        log.info("wrote %s", p)
        return p


def _json(obj: Any) -> str:
    def clean(v):
        if isinstance(v, float) and not np.isfinite(v):
            return None
        if isinstance(v, (np.floating, np.integer)):
            return clean(v.item())
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v

    return json.dumps(clean(obj), indent=1, sort_keys=True) + "\n"


# ---------------------------------------------------------------- commands


def cmd_design(c: dict[str, Any], base: Path, out: Output) -> int:
    try:
        h = generate(c)
    except geo.OverlapError as e:
        out.write("drc.json", _json({"pass": False, "violations": [{"kind": "overlap", "message": str(e)}]}))
        print(f"design rule failure: overlap violation: {e}", file=sys.stderr)
        return EXIT_DRC
    except geo.DesignError as e:
        raise ConfigError(str(e)) from e
    violations = geo.design_rule_check(h, c["min_gap_nm"], c["min_clearance_nm"])
    out.write("layout.json", geo.export_layout(h, "json"))
    out.write("layout.csv", geo.export_layout(h, "csv"))
    drc = {
        "pass": not violations,
        "n_holes": len(h),
        "min_gap_nm": c["min_gap_nm"],
        "min_clearance_nm": c["min_clearance_nm"],
        "violations": [
            {"kind": v.kind, "holes": list(v.holes), "value_nm": v.value, "limit_nm": v.limit, "message": str(v)}
            for v in violations
        ],
    }
    out.write("drc.json", _json(drc))
    for v in violations:
        print(str(v), file=sys.stderr)
    return EXIT_DRC if violations else EXIT_OK


def cmd_simulate(c: dict[str, Any], base: Path, out: Output) -> int:
    summary: dict[str, Any] = {}
    if c["vacuum_check"]:
        summary["vacuum_pulse_speed"] = pulse_speed_check(courant=c["courant"]).to_dict()
    if c["layout"] is not None or c["design"] is not None or not c["vacuum_check"]:
        h = _layout_from(c, base)
        run = simulate_cavity(h, _settings(c, compute_volume=c["compute_volume"]))
        summary.update(run.summary())
        for i, tr in enumerate(run.traces):
            out.write(f"trace_{i}.csv", tr.to_csv())
        out.write("eps.fsnp", eps_snapshot(run.grid).to_bytes())
        if run.intensity is not None:
            out.write("mode_E2.fsnp", run.intensity.to_bytes())
    out.write("summary.json", _json(summary))
    if "wavelength_nm" in summary:
        print(f"lambda_res = {summary['wavelength_nm']:.3f} nm, Q = {summary['q']}")
    return EXIT_OK


def cmd_bands(c: dict[str, Any], base: Path, out: Output) -> int:
    from .bands2d import k_path

    n_eff = c["n_eff"] if c["n_eff"] is not None else slab_neff(N_DIAMOND, 1.0, c["d_nm"], c["wavelength_nm"])
    bs = pwe_bands(c["a_nm"], c["r_nm"], n_eff, c["n_pw"], k_path(c["points_per_segment"]), c["n_bands"])
    design_point = c["a_nm"] / c["wavelength_nm"]
    gaps = bs.gaps()
    inside = [g for g in gaps if g[1] < design_point < g[2]]
    out.write("bands.csv", bs.to_csv())
    out.write(
        "bands.json",
        _json(
            {
                "n_eff": n_eff,
                "n_planewaves": bs.n_planewaves,
                "gaps": [{"below_band": g[0], "lower": g[1], "upper": g[2]} for g in gaps],
                "design_point_a_over_lambda": design_point,
                "design_point_in_gap": bool(inside),
                "warnings": list(bs.warnings),
            }
        ),
    )
    for g in gaps:
        print(f"gap above band {g[0]}: a/lambda {g[1]:.4f} .. {g[2]:.4f}")
    print(f"design point a/lambda = {design_point:.4f} ({'inside' if inside else 'outside'} a gap)")
    return EXIT_OK


def _read_data(c: dict[str, Any], base: Path) -> str:
    p = Path(c["data"])
    p = p if p.is_absolute() else base / p
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read data {p}: {e.strerror}") from e
    if not text.strip():
        raise ConfigError(f"data file {p} is empty")
    return text


def cmd_fit(c: dict[str, Any], base: Path, out: Output) -> int:
    text = _read_data(c, base)
    try:
        if c["model"] in ("lorentzian", "dip"):
            s = Spectrum.from_csv(text)
            if c["model"] == "lorentzian":
                res = fit_lorentzian_peak(s, c["guess"] or None)
            else:
                res = fit_reflection_dip(s, c["guess"] or None, axis_offset_ghz=c["axis_offset_ghz"])
        else:
            h = TimeTrace.from_histogram_csv(text)
            if c["model"] == "lifetime":
                res = fit_exponential_lifetime(h, c["t_start_ns"])
            else:
                res = fit_g2(h, c["threshold"])
    except (KeyError, IndexError) as e:
        raise ConfigError(f"data file does not parse: {e}") from e
    out.write("fit.json", res.to_json())
    print(", ".join(f"{k} = {v:.6g}" for k, v in res.params.items()) + f"  (converged: {res.converged})")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_cqed(c: dict[str, Any], base: Path, out: Output) -> int:
    overrides = {k: v for k, v in c.items() if k in CQED_INPUTS and v != CQED_INPUTS[k][0]}
    rep = build_cqed_report(overrides, c["use_tau_bulk"])
    out.write("cqed.json", rep.to_json())
    out.write("cqed.txt", rep.to_text())
    print(rep.to_text(), end="")
    return EXIT_OK


def cmd_yield(c: dict[str, Any], base: Path, out: Output) -> int:
    h = _layout_from(c, base)
    baseline = Baseline.simulate(h, _settings(c, compute_volume=True))
    m = DisorderModel(c["sigma_r_nm"], c["sigma_xy_nm"], c["sigma_d_nm"], c["seed"])
    crit = YieldCriteria(c["q_threshold"], c["wavelength_tol_percent"])
    rep = yield_study(baseline, m, c["n_samples"], crit, c["alpha"], c["q_base"])
    out.write("yield.json", rep.to_json())
    out.write("yield_records.csv", rep.records_csv())
    out.write("yield.txt", rep.to_text())
    print(rep.to_text(), end="")
    return EXIT_OK


def build_report(c: dict[str, Any]) -> dict[str, Any]:
    cq = build_cqed_report(c["cqed"], c["use_tau_bulk"])
    rankings = []
    for e in c["entries"]:
        r = rank_q(e["q"], e["label"]).to_dict()
        r["wavelength_nm"] = e["wavelength_nm"]
        same_kind = prior_rows(cavity_type=e["cavity_type"], material=e["material"])
        ratios = improvement_ratios(e["q"], same_kind)
        r["ratios_vs_prior_same_kind"] = ratios
        r["ratio_range_same_kind"] = [min(ratios.values()), max(ratios.values())] if ratios else None
        rankings.append(r)
    return {"cqed": cq.to_dict(), "rankings": rankings, "table": [row.to_dict() for row in TABLE]}


def _report_text(rep: dict[str, Any], cqed_text: str) -> str:
    lines = ["Q ranking against prior visible-wavelength cavities"]
    for r in rep["rankings"]:
        lines.append(f"  {r['label']}: Q = {r['q']:.3g}, rank {r['rank']} of {r['out_of']}")
        if r["ratio_range_same_kind"]:
            lo, hi = r["ratio_range_same_kind"]
            lines.append(f"    {lo:.1f}x to {hi:.1f}x the prior cavities of the same type and material")
    return "\n".join(lines) + "\n\n" + cqed_text


def cmd_report(c: dict[str, Any], base: Path, out: Output) -> int:
    rep = build_report(c)
    text = _report_text(rep, build_cqed_report(c["cqed"], c["use_tau_bulk"]).to_text())
    out.write("report.json", _json(rep))
    out.write("report.txt", text)
    out.write("q_series.csv", q_series_csv([(e["label"], e["q"]) for e in c["entries"]]))
    print(text, end="")
    return EXIT_OK


def cmd_table(c: dict[str, Any], base: Path, out: Output) -> int:
    out.write("table.json", table_json())
    out.write("table.csv", table_csv())
    print(table_csv(), end="")
    return EXIT_OK


COMMANDS: dict[str, tuple[Callable[[dict, Path, Output], int], str]] = {
    "design": (cmd_design, "generate a cavity layout and check design rules"),
    "simulate": (cmd_simulate, "FDTD resonance, Q and mode volume of a layout"),
    "bands": (cmd_bands, "plane-wave TE bands of the triangular lattice"),
    "fit": (cmd_fit, "fit a spectrum or photon-timing histogram"),
    "cqed": (cmd_cqed, "Purcell, cooperativity and coupling figures of merit"),
    "yield": (cmd_yield, "Monte Carlo fabrication-disorder yield"),
    "report": (cmd_report, "figures of merit and literature ranking"),
    "table": (cmd_table, "dump the embedded literature table"),
}


class _Parser(argparse.ArgumentParser):
    """Usage errors are config/input errors (exit 1), not argparse's default 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _fields_help(command: str) -> str:
    fields = COMMAND_FIELDS[command]
    if not fields:
        return "config fields: none besides schema_version"
    lines = ['config fields (JSON object with "schema_version": 1):']
    for name, f in fields.items():
        unit = f" [{f.unit}]" if f.unit else ""
        default = "required" if f.default is REQUIRED else f"default {json.dumps(f.default)}"
        choices = f" one of {list(f.choices)};" if f.choices else ""
        lines.append(f"  {name}{unit}: {f.help};{choices} {default}")
    return "\n".join(lines)


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="JSON config file")
    p.add_argument("--out", default=d("phc_lab_out"), help="output directory (default: phc_lab_out)")
    p.add_argument("--seed", type=int, default=d(None), help="random seed, unsigned 64-bit")
    p.add_argument("--force", action="store_true", default=d(False), help="overwrite existing outputs")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False), help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="phc-lab",
        description="Design, simulate and analyse photonic-crystal cavities.",
        epilog="exit codes: 0 ok, 1 config/input error, 2 design-rule failure, 3 divergence, 4 fit not converged",
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(
            name,
            help=helptext,
            description=helptext,
            epilog=_fields_help(name),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        _global_flags(sp, suppress=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg, base = load_config(args.command, args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg["seed"] = args.seed
        out = Output(Path(args.out), args.force)
        out.claim(OUTPUTS[args.command])
        return func(cfg, base, out)
    except DivergenceError as e:
        print(f"error: solver diverged at step {e.step}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
