"""Fabrication disorder: perturbed layouts, perturbative resonance shifts and yield.

A yield study simulates the unperturbed cavity once, then for each sample
perturbs the layout, re-rasterises it on the same grid and estimates the
resonance shift from first-order perturbation theory on the baseline mode.
The Q of each sample comes from a one-parameter phenomenological model

    1/Q = 1/Q_base + alpha * (sigma_eff / a)**2

where ``sigma_eff`` is the realised RMS radius and position error of the
sample.  ``alpha`` is fitted against direct simulations of perturbed
cavities with :func:`calibrate_alpha`.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.stats import binomtest

from ._workers import worker_count
from .cavity import CavityRun, CavitySettings, simulate_cavity
from .fdtd2d import FieldSnapshot, rasterize
from .geometry import HoleList
from .units import N_DIAMOND
from .wave1d import slab_neff

# fitted with calibrate_alpha on the a = 269 nm nanobeam (see demos/calibrate_disorder.py)
DEFAULT_ALPHA = 0.135

TRUNCATION_WARN_FRACTION = 0.01


class DegenerateFieldError(ValueError):
    pass


@dataclass(frozen=True)
class DisorderModel:
    """Gaussian fabrication errors in nm: hole radius, hole position (per
    axis) and film thickness, drawn from a seeded generator."""

    sigma_r: float = 0.0
    sigma_xy: float = 0.0
    sigma_d: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("sigma_r", "sigma_xy", "sigma_d"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def scaled(self, k: float) -> "DisorderModel":
        return DisorderModel(self.sigma_r * k, self.sigma_xy * k, self.sigma_d * k, self.seed)

    def rng(self, sample_index: int) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), int(sample_index)])


def perturb(h: HoleList, m: DisorderModel, sample_index: int) -> HoleList:
    """One disordered copy of ``h``.

    Radii are drawn from ``N(r, sigma_r^2)`` truncated to ``|dr| <= r/2``
    (by redrawing), centres get independent ``N(0, sigma_xy^2)`` offsets
    per axis and the film thickness ``N(d, sigma_d^2)``.  The draws are a
    pure function of ``(m.seed, sample_index)``.  Holes and outline are
    returned unchanged when every sigma is zero.
    """
    rng = m.rng(sample_index)
    holes = np.array(h.holes, dtype=float)
    n = len(holes)
    r0 = holes[:, 2].copy()
    dr = rng.normal(0.0, 1.0, n) * m.sigma_r
    limit = 0.5 * r0
    bad = np.abs(dr) > limit
    hits = int(bad.sum())
    while np.any(bad):
        dr[bad] = rng.normal(0.0, 1.0, int(bad.sum())) * m.sigma_r
        bad = np.abs(dr) > limit
    dxy = rng.normal(0.0, 1.0, (n, 2)) * m.sigma_xy
    dd = float(rng.normal(0.0, 1.0)) * m.sigma_d
    if m.sigma_r or m.sigma_xy:
        holes[:, 2] = r0 + dr
        holes[:, :2] += dxy
    meta = dict(h.metadata)
    thickness = float(meta.get("thickness_nm", 160.0))
    meta["thickness_nm"] = thickness + dd if m.sigma_d else thickness
    meta["disorder"] = {
        "seed": int(m.seed),
        "sample": int(sample_index),
        "truncation_hits": hits,
        "rms_dr_nm": float(np.sqrt(np.mean(dr**2))) if n else 0.0,
        "rms_dxy_nm": float(np.sqrt(np.mean(dxy**2))) if n else 0.0,
        "dd_nm": dd,
    }
    if n and hits > TRUNCATION_WARN_FRACTION * n:
        meta["disorder"]["warning"] = f"radius truncation hit on {hits} of {n} holes"
    return HoleList(holes if (m.sigma_r or m.sigma_xy) else h.holes, h.outline, h.spec, h.provenance, meta)


def resonance_shift_perturbation(
    snapshot: FieldSnapshot | np.ndarray, eps_base: np.ndarray, eps_perturbed: np.ndarray
) -> float:
    """First-order relative wavelength shift ``dlambda/lambda``.

    ``dw/w = -(1/2) sum(d_eps |E|^2) / sum(eps |E|^2)`` and, to first order,
    ``dlambda/lambda = -dw/w``.  ``snapshot`` is |E|^2 of the unperturbed
    mode on the permittivity raster.
    """
    e2 = snapshot.values if isinstance(snapshot, FieldSnapshot) else np.asarray(snapshot)
    eps_base = np.asarray(eps_base, dtype=float)
    eps_perturbed = np.asarray(eps_perturbed, dtype=float)
    if not (e2.shape == eps_base.shape == eps_perturbed.shape):
        raise ValueError("field and permittivity rasters are not aligned")
    denom = float(np.sum(eps_base * e2))
    if not denom > 0:
        raise DegenerateFieldError("field energy is zero: no mode to perturb")
    dw_over_w = -0.5 * float(np.sum((eps_perturbed - eps_base) * e2)) / denom
    return -dw_over_w


@dataclass
class Baseline:
    """Unperturbed reference: layout, resonance, Q and mode intensity on its grid."""

    holes: HoleList
    run: CavityRun

    def __post_init__(self) -> None:
        if self.run.intensity is None:
            raise ValueError("baseline run carries no mode intensity (compute_volume was off)")

    @classmethod
    def simulate(cls, h: HoleList, settings: CavitySettings = CavitySettings()) -> "Baseline":
        from dataclasses import replace

        return cls(h, simulate_cavity(h, replace(settings, compute_volume=True)))

    @property
    def wavelength_nm(self) -> float:
        return self.run.wavelength_nm

    @property
    def q(self) -> float:
        return self.run.q

    def eps_for(self, h: HoleList) -> np.ndarray:
        """Permittivity of a perturbed layout on the baseline grid."""
        g = self.run.grid
        d = float(h.metadata.get("thickness_nm", 160.0))
        d0 = float(self.holes.metadata.get("thickness_nm", 160.0))
        n_eff = self.run.n_eff
        if d != d0:
            # shift the effective index by the slab-model change at the resonance
            lam = self.wavelength_nm
            n_eff = n_eff + slab_neff(N_DIAMOND, 1.0, d, lam) - slab_neff(N_DIAMOND, 1.0, d0, lam)
        return rasterize(h, n_eff, g.dx, 0.0, subsample=self.run.settings.subsample, like=g, enforce_resolution=False
        ).eps


@dataclass(frozen=True)
class YieldCriteria:
    q_threshold: float = 2.0e4
    wavelength_tol_percent: float = 2.9

    def __post_init__(self) -> None:
        if not self.q_threshold > 0 or not self.wavelength_tol_percent > 0:
            raise ValueError("yield criteria must be > 0")


@dataclass(frozen=True)
class SampleRecord:
    sample: int
    dlambda_nm: float
    q_est: float
    sigma_eff_nm: float
    dd_nm: float
    truncation_hits: int


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


REFERENCE_VALUES = {
    "high_q_fraction": {"value": 53 / 57, "label": "93% (53 of 57) high-Q modes near the design"},
    "wavelength_deviation_percent_1d": {"value": 2.9, "label": "measured vs simulated, 1D"},
    "wavelength_deviation_percent_2d": {"value": 2.5, "label": "measured vs simulated, 2D"},
}


@dataclass
class YieldReport:
    n_samples: int
    criteria: YieldCriteria
    model: DisorderModel
    baseline_wavelength_nm: float
    q_base: float
    alpha: float
    fraction_q_above: float
    fraction_q_above_ci: tuple[float, float]
    fraction_wavelength_within: float
    fraction_wavelength_within_ci: tuple[float, float]
    fraction_both: float
    fraction_both_ci: tuple[float, float]
    records: list[SampleRecord] = field(default_factory=list)
    reference: dict[str, Any] = field(default_factory=lambda: json.loads(json.dumps(REFERENCE_VALUES)))

    def to_dict(self, include_records: bool = True) -> dict[str, Any]:
        d = {
            "n_samples": self.n_samples,
            "criteria": asdict(self.criteria),
            "model": asdict(self.model),
            "baseline_wavelength_nm": self.baseline_wavelength_nm,
            "q_base": self.q_base,
            "alpha": self.alpha,
            "fraction_q_above": self.fraction_q_above,
            "fraction_q_above_ci": list(self.fraction_q_above_ci),
            "fraction_wavelength_within": self.fraction_wavelength_within,
            "fraction_wavelength_within_ci": list(self.fraction_wavelength_within_ci),
            "fraction_both": self.fraction_both,
            "fraction_both_ci": list(self.fraction_both_ci),
            "reference": self.reference,
        }
        if include_records:
            d["records"] = [asdict(r) for r in self.records]
        return d

    def to_json(self, include_records: bool = True) -> str:
        return json.dumps(self.to_dict(include_records), indent=1, sort_keys=True) + "\n"

    def records_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample", "dlambda_nm", "q_est"])
        for r in self.records:
            w.writerow([r.sample, repr(float(r.dlambda_nm)), repr(float(r.q_est))])
        return buf.getvalue()

    def to_text(self) -> str:
        ref = self.reference
        c = self.criteria
        lines = [
            f"samples: {self.n_samples}  (seed {self.model.seed}; sigma_r {self.model.sigma_r} nm, "
            f"sigma_xy {self.model.sigma_xy} nm, sigma_d {self.model.sigma_d} nm)",
            f"baseline: lambda {self.baseline_wavelength_nm:.3f} nm, Q_base {self.q_base:.4g}, alpha {self.alpha:.4g}",
            f"Q > {c.q_threshold:.3g}: {self.fraction_q_above:.3f} "
            f"[{self.fraction_q_above_ci[0]:.3f}, {self.fraction_q_above_ci[1]:.3f}]",
            f"|dlambda| <= {c.wavelength_tol_percent}%: {self.fraction_wavelength_within:.3f} "
            f"[{self.fraction_wavelength_within_ci[0]:.3f}, {self.fraction_wavelength_within_ci[1]:.3f}]",
            f"both: {self.fraction_both:.3f} [{self.fraction_both_ci[0]:.3f}, {self.fraction_both_ci[1]:.3f}]",
            "reference (display only):",
        ]
        lines += [f"  {v['label']}: {v['value']:.3g}" for v in ref.values()]
        lines.append("not modelled: surface absorption and sidewall roughness or tilt of the air holes")
        return "\n".join(lines) + "\n"


def q_model(q_base: float, alpha: float, sigma_eff_nm: float, a_nm: float) -> float:
    return 1.0 / (1.0 / q_base + alpha * (sigma_eff_nm / a_nm) ** 2)


def _sigma_eff(meta: dict[str, Any]) -> float:
    dis = meta["disorder"]
    return float(np.hypot(dis["rms_dr_nm"], dis["rms_dxy_nm"]))


def yield_study(
    baseline: Baseline | None,
    m: DisorderModel,
    n_samples: int,
    criteria: YieldCriteria = YieldCriteria(),
    alpha: float = DEFAULT_ALPHA,
    q_base: float | None = None,
    confidence: float = 0.95,
) -> YieldReport:
    """Monte Carlo yield of the baseline design under disorder ``m``.

    ``q_base`` defaults to the baseline run's Q.  Samples are evaluated in
    parallel but collected in index order, so the report depends only on
    its inputs.
    """
    if baseline is None:
        raise ValueError("yield_study needs a simulated baseline (see Baseline.simulate)")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    h0 = baseline.holes
    a = float(h0.metadata.get("a_nm") or np.median(np.diff(np.sort(h0.x))))
    lam0 = baseline.wavelength_nm
    qb = float(baseline.q if q_base is None else q_base)
    eps0 = baseline.run.grid.eps
    e2 = baseline.run.intensity

    def one(i: int) -> SampleRecord:
        hp = perturb(h0, m, i)
        dl = resonance_shift_perturbation(e2, eps0, baseline.eps_for(hp)) * lam0
        s_eff = _sigma_eff(hp.metadata)
        dis = hp.metadata["disorder"]
        return SampleRecord(i, dl, q_model(qb, alpha, s_eff, a), s_eff, dis["dd_nm"], dis["truncation_hits"])

    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        records = list(ex.map(one, range(n_samples)))
    hits = sum(r.truncation_hits for r in records)
    if hits > TRUNCATION_WARN_FRACTION * n_samples * max(len(h0), 1):
        warnings.warn(f"radius truncation hit {hits} times over {n_samples} samples", stacklevel=2)

    q_ok = np.array([r.q_est > criteria.q_threshold for r in records])
    lam_ok = np.array([abs(r.dlambda_nm) / lam0 * 100 <= criteria.wavelength_tol_percent for r in records])
    both = q_ok & lam_ok

    def frac(mask):
        k = int(mask.sum())
        return k / n_samples, wilson_interval(k, n_samples, confidence)

    fq, ciq = frac(q_ok)
    fl, cil = frac(lam_ok)
    fb, cib = frac(both)
    return YieldReport(n_samples, criteria, m, lam0, qb, alpha, fq, ciq, fl, cil, fb, cib, records)


def calibrate_alpha(
    h: HoleList,
    sigmas_nm: tuple[float, ...] = (3.0, 6.0),
    samples_per_sigma: int = 2,
    settings: CavitySettings = CavitySettings(compute_volume=False),
    seed: int = 1,
) -> tuple[float, list[tuple[float, float]]]:
    """Least-squares ``alpha`` from direct simulations of disordered layouts.

    Each sigma is applied to radii and positions alike.  Returns ``alpha``
    and the ``(sigma_eff / a, 1/Q - 1/Q_base)`` points it was fitted to.
    """
    from dataclasses import replace

    a = float(h.metadata.get("a_nm"))
    layouts = [
        perturb(h, DisorderModel(sigma_r=s, sigma_xy=s, sigma_d=0.0, seed=seed), i)
        for s in sigmas_nm
        for i in range(samples_per_sigma)
    ]
    # one cell size for every run, fine enough for the smallest perturbed hole
    rmin = min(float(x.r[x.r > 0].min()) for x in [h, *layouts])
    dx = min(settings.dx_nm or np.inf, rmin / 4)
    settings = replace(settings, compute_volume=False, dx_nm=dx)
    q0 = simulate_cavity(h, settings).q
    pts = []
    for hp in layouts:
        q = simulate_cavity(hp, settings).q
        pts.append((_sigma_eff(hp.metadata) / a, 1.0 / q - 1.0 / q0))
    x = np.array([p[0] ** 2 for p in pts])
    y = np.array([p[1] for p in pts])
    alpha = float(x @ y / (x @ x))
    return alpha, pts
