"""Cavity-QED figures of merit for a colour centre in a photonic-crystal cavity.

Rates are ordinary frequencies in GHz (not angular), matching how cavity
linewidths and emitter linewidths are usually quoted.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

from .units import ModeVolume, q_to_kappa, wavelength_interval_to_ghz

G_EXPERIMENTAL_GHZ = 8.0
G_THEORETICAL_GHZ = 15.2


class CalibrationError(ValueError):
    """Measured efficiencies are inconsistent with the setup calibration."""


@dataclass(frozen=True)
class EmitterParams:
    """Silicon-vacancy defaults: natural linewidth, Debye-Waller factor,
    branching ratio into the D line, and emitter-cavity coupling."""

    gamma_ghz: float = 0.12
    debye_waller: float = 0.70
    branching_d: float = 0.193
    g_ghz: float = G_EXPERIMENTAL_GHZ

    def __post_init__(self) -> None:
        for name in ("debye_waller", "branching_d"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        if not self.gamma_ghz > 0 or not self.g_ghz > 0:
            raise ValueError("gamma and g must be > 0")

    @property
    def epsilon_zpl(self) -> float:
        """Fraction of emission into the observed zero-phonon transition."""
        return self.debye_waller * self.branching_d


def purcell_ideal(q: float, v: ModeVolume | float) -> float:
    """``F = 3 / (4 pi^2) * Q / V`` with ``V`` in units of (lambda/n)^3."""
    vol = v.v if isinstance(v, ModeVolume) else float(v)
    if not q > 0 or not vol > 0:
        raise ValueError("Q and V must be > 0")
    return 3.0 / (4.0 * math.pi**2) * q / vol


def purcell_from_lifetimes(tau_on: float, tau_off: float, e: EmitterParams = EmitterParams()) -> float:
    """Zero-phonon-line Purcell factor ``(tau_off / tau_on - 1) / epsilon_zpl``."""
    if not 0 < tau_on <= tau_off:
        raise ValueError(f"need 0 < tau_on <= tau_off, got {tau_on}, {tau_off}")
    return (tau_off / tau_on - 1.0) / e.epsilon_zpl


def cooperativity(g: float, kappa: float, gamma: float) -> float:
    """``C = 4 g^2 / (kappa gamma)``; all rates in the same units."""
    if not (g > 0 and kappa > 0 and gamma > 0):
        raise ValueError("g, kappa and gamma must be > 0")
    return 4.0 * g * g / (kappa * gamma)


@dataclass(frozen=True)
class CouplingBudget:
    """Split of the loaded Q into intrinsic and extrinsic parts, plus efficiencies.

    ``regime`` is ``"under"`` (intrinsic loss dominates), ``"over"``
    (waveguide coupling dominates) or ``"unresolved"``.  For
    ``"unresolved"`` the pair ``(q_i, q_e)`` is given in the under-coupled
    order and ``interchangeable`` is set: a reflection measurement alone
    cannot tell which is which.
    """

    q_loaded: float
    r0: float
    regime: str
    q_i: float
    q_e: float
    interchangeable: bool = False
    eta_s: float | None = None
    eta_c: float | None = None
    eta_tot: float | None = None

    @property
    def q_pair(self) -> tuple[float, float]:
        return tuple(sorted((self.q_i, self.q_e)))

    def kappas_ghz(self, wavelength_nm: float) -> dict[str, float]:
        nu_ghz = q_to_kappa(1.0, wavelength_nm)
        return {"kappa": nu_ghz / self.q_loaded, "kappa_i": nu_ghz / self.q_i, "kappa_e": nu_ghz / self.q_e}

    def with_efficiency(self, eta_tot: float, eta_s: float) -> "CouplingBudget":
        return replace(self, eta_s=eta_s, eta_c=coupling_efficiency(eta_tot, eta_s), eta_tot=eta_tot)


def split_intrinsic_extrinsic(q_loaded: float, r0: float, regime: str = "both") -> CouplingBudget:
    """Intrinsic and extrinsic Q from the loaded Q and the dip floor ``r0``.

    On resonance the reflected amplitude is ``|kappa_i - kappa_e| / kappa``,
    so ``kappa_i = kappa (1 + sqrt(r0)) / 2`` when under-coupled and
    ``kappa (1 - sqrt(r0)) / 2`` when over-coupled; ``kappa_e`` takes the
    rest.  ``regime="both"`` returns the unresolved pair.
    """
    if not q_loaded > 0:
        raise ValueError("q_loaded must be > 0")
    if not 0 <= r0 <= 1:
        raise ValueError(f"r0 must be in [0, 1], got {r0}")
    if regime not in ("over", "under", "both"):
        raise ValueError(f"regime must be 'over', 'under' or 'both', got {regime!r}")
    s = math.sqrt(r0)
    # fractions of the total decay rate, each formed directly (1 - frac_i would cancel near r0 = 1)
    small, large = 0.5 * (1 - s), 0.5 * (1 + s)
    frac_i, frac_e = (small, large) if regime == "over" else (large, small)
    q_i = q_loaded / frac_i if frac_i > 0 else math.inf
    q_e = q_loaded / frac_e if frac_e > 0 else math.inf
    if regime == "both":
        return CouplingBudget(q_loaded, r0, "unresolved", q_i, q_e, interchangeable=True)
    return CouplingBudget(q_loaded, r0, regime, q_i, q_e)


def coupling_efficiency(eta_tot: float, eta_s: float) -> float:
    """Device-to-fiber efficiency from ``eta_tot = eta_s * eta_c**2``."""
    if not 0 < eta_s <= 1:
        raise ValueError(f"eta_s must be in (0, 1], got {eta_s}")
    if not 0 <= eta_tot <= 1:
        raise ValueError(f"eta_tot must be in [0, 1], got {eta_tot}")
    if eta_tot > eta_s:
        raise CalibrationError(f"eta_tot = {eta_tot} exceeds the setup efficiency eta_s = {eta_s}")
    return math.sqrt(eta_tot / eta_s)


def detuning_enhancement(f0: float, delta: float, kappa: float) -> float:
    """Lorentzian roll-off ``F0 / (1 + (2 delta / kappa)^2)``."""
    if f0 < 0 or not kappa > 0:
        raise ValueError("need F0 >= 0 and kappa > 0")
    return f0 / (1.0 + (2.0 * delta / kappa) ** 2)


# --------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class Sourced:
    value: Any
    unit: str
    source: str


PUBLISHED = "published value"
USER = "user input"

# name -> (default, unit, description)
CQED_INPUTS: dict[str, tuple[float, str, str]] = {
    "wavelength_nm": (737.0, "nm", "cavity / emitter wavelength"),
    "q_purcell": (1.2e5, "", "measured Q of the emitter-coupled cavity"),
    "mode_volume": (0.5, "(lambda/n)^3", "simulated mode volume"),
    "tau_on_ns": (0.47, "ns", "lifetime on resonance"),
    "tau_off_ns": (1.3, "ns", "lifetime far detuned"),
    "tau_bulk_ns": (1.2, "ns", "lifetime in unpatterned film (alternative to tau_off)"),
    "gamma_ghz": (0.12, "GHz", "natural emitter linewidth"),
    "debye_waller": (0.70, "", "Debye-Waller factor"),
    "branching_d": (0.193, "", "branching ratio into the D line"),
    "g_ghz": (G_EXPERIMENTAL_GHZ, "GHz", "emitter-cavity coupling, observed scale"),
    "g_theory_ghz": (G_THEORETICAL_GHZ, "GHz", "emitter-cavity coupling at the field maximum"),
    "q_high": (1.8e5, "", "highest measured Q (under-coupled device)"),
    "q_loaded": (8.4e4, "", "loaded Q of the waveguide-coupled device"),
    "kappa_high_quoted_ghz": (2.2, "GHz", "rounded linewidth quoted for q_high"),
    "kappa_loaded_quoted_ghz": (4.8, "GHz", "rounded linewidth quoted for q_loaded"),
    "contrast": (0.954, "", "reflection dip contrast (1 - r0) used for the split"),
    "contrast_alt": (0.953, "", "alternative contrast value reported for the same dip"),
    "detuning_nm": (0.4, "nm", "far-detuned cavity-emitter offset"),
    "eta_tot": (0.4225, "", "total D1 to D2 efficiency"),
    "eta_s": (1.0, "", "setup efficiency from the retroreflector calibration"),
}


@dataclass
class CqedReport:
    inputs: dict[str, Sourced]
    results: dict[str, Sourced]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "inputs": {k: asdict(v) for k, v in self.inputs.items()},
            "results": {k: asdict(v) for k, v in self.results.items()},
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_text(self) -> str:
        def fmt(v):
            if isinstance(v, float):
                return f"{v:.6g}"
            if isinstance(v, (list, tuple)):
                return "[" + ", ".join(fmt(x) for x in v) + "]"
            return str(v)

        lines = ["Inputs"]
        w = max(len(k) for k in self.inputs)
        for k, s in self.inputs.items():
            lines.append(f"  {k:<{w}} = {fmt(s.value)} {s.unit}".rstrip() + f"   [{s.source}]")
        lines.append("Figures of merit")
        w = max(len(k) for k in self.results)
        for k, s in self.results.items():
            lines.append(f"  {k:<{w}} = {fmt(s.value)} {s.unit}".rstrip() + f"   [{s.source}]")
        if self.notes:
            lines.append("Notes")
            lines += [f"  - {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def build_cqed_report(overrides: dict[str, float] | None = None, use_tau_bulk: bool = False) -> CqedReport:
    """Every figure of merit from the published defaults, with user overrides.

    Each input is echoed with its source.  ``use_tau_bulk`` takes the
    unpatterned-film lifetime as the off-resonance reference.
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(CQED_INPUTS)
    if unknown:
        raise ValueError(f"unknown cqed inputs: {sorted(unknown)}")
    inputs = {
        k: Sourced(float(overrides.get(k, d)), unit, USER if k in overrides else PUBLISHED)
        for k, (d, unit, _) in CQED_INPUTS.items()
    }
    x = {k: s.value for k, s in inputs.items()}
    e = EmitterParams(x["gamma_ghz"], x["debye_waller"], x["branching_d"], x["g_ghz"])
    lam = x["wavelength_nm"]
    tau_ref = x["tau_bulk_ns"] if use_tau_bulk else x["tau_off_ns"]

    def derived(what: str) -> str:
        return f"derived: {what}"

    res: dict[str, Sourced] = {}
    res["F_ideal"] = Sourced(purcell_ideal(x["q_purcell"], x["mode_volume"]), "", derived("3/(4 pi^2) Q/V"))
    res["epsilon_zpl"] = Sourced(e.epsilon_zpl, "", derived("debye_waller * branching_d"))
    res["F_ZPL"] = Sourced(
        purcell_from_lifetimes(x["tau_on_ns"], tau_ref, e),
        "",
        derived(("tau_bulk" if use_tau_bulk else "tau_off") + " / tau_on - 1, over epsilon_zpl"),
    )
    k_high = float(q_to_kappa(x["q_high"], lam))
    k_loaded = float(q_to_kappa(x["q_loaded"], lam))
    k_purcell = float(q_to_kappa(x["q_purcell"], lam))
    res["kappa_high_ghz"] = Sourced(k_high, "GHz", derived("nu / q_high"))
    res["kappa_loaded_ghz"] = Sourced(k_loaded, "GHz", derived("nu / q_loaded"))
    res["C_high"] = Sourced(cooperativity(e.g_ghz, k_high, e.gamma_ghz), "", derived("4 g^2 / (kappa_high gamma)"))
    res["C_loaded"] = Sourced(cooperativity(e.g_ghz, k_loaded, e.gamma_ghz), "", derived("4 g^2 / (kappa_loaded gamma)"))
    res["C_theory"] = Sourced(
        cooperativity(x["g_theory_ghz"], k_high, e.gamma_ghz), "", derived("4 g_theory^2 / (kappa_high gamma)")
    )
    # the same three numbers from the rounded linewidths, to expose rounding drift
    kq_high, kq_loaded = x["kappa_high_quoted_ghz"], x["kappa_loaded_quoted_ghz"]
    res["C_high_quoted"] = Sourced(cooperativity(e.g_ghz, kq_high, e.gamma_ghz), "", derived("4 g^2 / (kappa_high_quoted gamma)"))
    res["C_loaded_quoted"] = Sourced(
        cooperativity(e.g_ghz, kq_loaded, e.gamma_ghz), "", derived("4 g^2 / (kappa_loaded_quoted gamma)")
    )
    res["C_theory_quoted"] = Sourced(
        cooperativity(x["g_theory_ghz"], kq_high, e.gamma_ghz), "", derived("4 g_theory^2 / (kappa_high_quoted gamma)")
    )
    for tag, contrast in (("", x["contrast"]), ("_alt", x["contrast_alt"])):
        split = split_intrinsic_extrinsic(x["q_loaded"], 1.0 - contrast, "both")
        res[f"q_split{tag}"] = Sourced(list(split.q_pair), "", derived(f"unresolved Q_i/Q_e pair at contrast {contrast}"))
        res[f"q_split_mean{tag}"] = Sourced(sum(split.q_pair) / 2, "", derived("midpoint of the pair"))
    res["eta_c"] = Sourced(coupling_efficiency(x["eta_tot"], x["eta_s"]), "", derived("sqrt(eta_tot / eta_s)"))
    delta = float(wavelength_interval_to_ghz(x["detuning_nm"], lam))
    res["detuning_ghz"] = Sourced(delta, "GHz", derived("c * detuning_nm / lambda^2"))
    res["kappa_purcell_ghz"] = Sourced(k_purcell, "GHz", derived("nu / q_purcell"))
    f_det = detuning_enhancement(res["F_ZPL"].value, delta, k_purcell)
    res["F_ZPL_detuned"] = Sourced(f_det, "", derived("F_ZPL / (1 + (2 delta / kappa)^2)"))
    res["detuning_suppression"] = Sourced(
        1.0 + (2 * delta / k_purcell) ** 2, "", derived("F_ZPL / F_ZPL_detuned")
    )
    notes = [
        "Q_i and Q_e from a reflection dip alone are interchangeable; both orderings satisfy 1/Q = 1/Q_i + 1/Q_e.",
        "The midpoint of the unresolved pair is shown for comparison with a single quoted intrinsic Q; "
        "it is not asserted to be how that value was obtained.",
        "Two contrast values are reported for the same dip; results for both are listed.",
        "F_ideal assumes the emitter sits at the field maximum with aligned dipole and zero detuning.",
        "An observed intensity enhancement is not the same quantity as F_ZPL; the two are not reconciled here.",
    ]
    return CqedReport(inputs, res, notes)
