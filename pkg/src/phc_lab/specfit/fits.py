"""Least-squares line-shape fits for spectra and photon-counting histograms.

All fits run in a normalised frame: the axis is shifted to the initial
centre guess and divided by the initial width guess, and the counts are
divided by their maximum.  Parameters are mapped back afterwards.  This
keeps the problems well conditioned (a 0.004 nm line at 737 nm would
otherwise be hopeless in double precision) and makes every fit invariant
under axis offsets and positive rescaling of the counts.

The optimiser is scipy's MINPACK Levenberg-Marquardt with analytic
Jacobians.  A fit is reported as converged only if MINPACK stops on a
tolerance criterion, the cost did not increase from the initial guess, and
the line (peak, dip or decay) is statistically distinguishable from a flat
background.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.optimize import least_squares

from ..units import C_NM_THZ
from .data import Spectrum, TimeTrace

MAX_ITERATIONS = 200
STEP_TOL = 1e-10
POLISH_ITERATIONS = 50
# a line must stand this many standard errors above zero to count as found
SIGNIFICANCE = 3.0


@dataclass
class FitResult:
    """Outcome of one fit.

    ``params`` and ``uncertainties`` (one standard error, scaled by the
    reduced chi-square) are in the units of the input data.  ``derived``
    holds quantities computed from the parameters, such as ``q``.
    """

    model: str
    params: dict[str, float]
    uncertainties: dict[str, float]
    residual_rms: float
    converged: bool
    iterations: int
    derived: dict[str, Any] = field(default_factory=dict)
    message: str = ""

    def __post_init__(self) -> None:
        for k, v in self.uncertainties.items():
            if v < 0:
                raise ValueError(f"negative uncertainty for {k}")

    def __getitem__(self, key: str) -> float:
        if key in self.params:
            return self.params[key]
        return self.derived[key]

    def to_dict(self) -> dict[str, Any]:
        def clean(v):
            if isinstance(v, (float, np.floating)):
                v = float(v)
                return v if np.isfinite(v) else None
            if isinstance(v, (np.bool_, bool)):
                return bool(v)
            if isinstance(v, (np.integer,)):
                return int(v)
            return v

        return {
            "model": self.model,
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "residual_rms": clean(self.residual_rms),
            "params": [
                {"name": k, "value": clean(v), "uncertainty": clean(self.uncertainties.get(k, float("nan")))}
                for k, v in self.params.items()
            ],
            "derived": {k: clean(v) for k, v in self.derived.items()},
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        d = json.loads(text)

        def num(v):
            return float("nan") if v is None else v

        return cls(
            model=d["model"],
            params={p["name"]: num(p["value"]) for p in d["params"]},
            uncertainties={p["name"]: num(p["uncertainty"]) for p in d["params"]},
            residual_rms=num(d["residual_rms"]),
            converged=d["converged"],
            iterations=d["iterations"],
            derived={k: num(v) if v is None else v for k, v in d["derived"].items()},
            message=d.get("message", ""),
        )


# --------------------------------------------------------------------------
# model functions (also the synthetic generators)


def lorentzian(x, x0: float, fwhm: float, amplitude: float, offset: float = 0.0):
    """``offset + amplitude * (fwhm/2)**2 / ((x - x0)**2 + (fwhm/2)**2)``."""
    h2 = (0.5 * fwhm) ** 2
    return offset + amplitude * h2 / ((np.asarray(x) - x0) ** 2 + h2)


def reflection_dip(nu, nu0: float, kappa: float, r0: float, baseline: float = 1.0):
    """``baseline * (1 - (1 - r0) * L(nu))`` with ``L`` a unit-height Lorentzian of FWHM ``kappa``."""
    return baseline * (1.0 - (1.0 - r0) * lorentzian(nu, nu0, kappa, 1.0))


def exponential_decay(t, tau: float, amplitude: float, offset: float = 0.0):
    return amplitude * np.exp(-np.asarray(t) / tau) + offset


def g2_antibunching(tau, g2_0: float, tau_c: float, norm: float = 1.0):
    """``norm * (1 - (1 - g2_0) * exp(-|tau| / tau_c))``."""
    return norm * (1.0 - (1.0 - g2_0) * np.exp(-np.abs(np.asarray(tau)) / tau_c))


# --------------------------------------------------------------------------
# shared machinery


@dataclass
class _Solution:
    p: np.ndarray
    cov: np.ndarray
    rms: float
    ok: bool
    nfev: int
    message: str


def _solve(
    resid: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    p0: np.ndarray,
) -> _Solution:
    p0 = np.asarray(p0, dtype=float)
    r0 = resid(p0)
    cost0 = float(r0 @ r0)
    try:
        res = least_squares(
            resid, p0, jac=jac, method="lm", xtol=STEP_TOL, ftol=STEP_TOL, gtol=1e-15,
            max_nfev=MAX_ITERATIONS,
        )
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _Solution(p0, np.full((len(p0), len(p0)), np.inf), np.sqrt(cost0 / len(r0)), False, 0, str(exc))
    p = res.x
    if res.status > 0:
        p = _polish(resid, jac, p)
    r = resid(p)
    cost = float(r @ r)
    dof = max(len(r) - len(p0), 1)
    j = jac(p)
    with np.errstate(all="ignore"):
        jtj = j.T @ j
        try:
            cov = np.linalg.inv(jtj) * (cost / dof)
        except np.linalg.LinAlgError:
            cov = np.full((len(p0), len(p0)), np.inf)
        if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) < 0):
            cov = np.full((len(p0), len(p0)), np.inf)
    ok = res.status > 0 and np.all(np.isfinite(p)) and cost <= cost0 * (1 + 1e-12)
    return _Solution(p, cov, float(np.sqrt(cost / len(r))), bool(ok), int(res.nfev), res.message)


def _polish(resid, jac, p: np.ndarray) -> np.ndarray:
    """Gauss-Newton steps from a converged point down to rounding level.

    Convergence is decided at ``STEP_TOL``, but near a noisy minimum the
    Levenberg-Marquardt steps shrink only linearly, leaving ~1e-9 relative
    differences between fits of the same data in different units.  A few
    undamped steps remove them; a step that raises the cost is rejected.
    """
    r = resid(p)
    cost = float(r @ r)
    for _ in range(POLISH_ITERATIONS):
        with np.errstate(all="ignore"):
            step = np.linalg.lstsq(jac(p), r, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        trial = p - step
        rt = resid(trial)
        ct = float(rt @ rt)
        if not ct <= cost * (1 + 1e-13):
            break
        p, r, cost = trial, rt, ct
        if np.all(np.abs(step) <= 4 * np.finfo(float).eps * np.maximum(np.abs(p), 1.0)):
            break
    return p


def _sigma(cov: np.ndarray, i: int, scale: float = 1.0) -> float:
    v = cov[i, i]
    return float(np.sqrt(v) * abs(scale)) if np.isfinite(v) and v >= 0 else float("inf")


def _half_max_width(x: np.ndarray, y: np.ndarray, i_peak: int, base: float) -> float:
    """Full width at half height above ``base``, linearly interpolated."""
    half = base + 0.5 * (y[i_peak] - base)
    left = right = None
    for i in range(i_peak, 0, -1):
        if y[i - 1] <= half < y[i] or y[i - 1] < half <= y[i]:
            left = x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
            break
    for i in range(i_peak, len(y) - 1):
        if y[i + 1] <= half < y[i] or y[i + 1] < half <= y[i]:
            right = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
            break
    if left is None and right is None:
        return float(x[-1] - x[0])
    if left is None:
        return 2.0 * (right - x[i_peak])
    if right is None:
        return 2.0 * (x[i_peak] - left)
    return float(right - left)


def _check_spectrum(s: Spectrum, min_samples: int = 8) -> None:
    if len(s) < min_samples:
        raise ValueError(f"need >= {min_samples} samples, got {len(s)}")


def _unconverged(model: str, names: list[str], message: str) -> FitResult:
    nan = float("nan")
    return FitResult(
        model, {n: nan for n in names}, {n: float("inf") for n in names}, nan, False, 0, {}, message
    )


def _smooth(y: np.ndarray, n: int = 5) -> np.ndarray:
    if len(y) < 3 * n:
        return y
    k = np.ones(n) / n
    return np.convolve(np.pad(y, n // 2, mode="edge"), k, mode="valid")


# --------------------------------------------------------------------------
# Lorentzian peak


def fit_lorentzian_peak(s: Spectrum, guess: dict[str, float] | None = None) -> FitResult:
    """Lorentzian peak ``B + A (G/2)^2 / ((x - x0)^2 + (G/2)^2)`` with ``Q = x0 / G``.

    Parameters are ``center``, ``fwhm``, ``amplitude`` and ``offset`` in the
    units of the spectrum axis and counts.  The automatic guess takes the
    (lightly smoothed) maximum and its half-maximum crossings.  A spectrum
    with no variation, or whose fitted amplitude is not significant, gives
    ``converged=False``.
    """
    names = ["center", "fwhm", "amplitude", "offset"]
    _check_spectrum(s)
    x, y = s.axis, s.counts
    ymax = float(y.max())
    if not ymax > 0 or np.ptp(y) <= 1e-12 * ymax:
        return _unconverged("lorentzian_peak", names, "flat spectrum: no peak to fit")
    g = dict(guess or {})
    ys = _smooth(y)
    i_pk = int(np.argmax(ys))
    base = float(np.min(ys))
    x0 = float(g.get("center", x[i_pk]))
    w = float(g.get("fwhm", _half_max_width(x, ys, i_pk, base)))
    if not w > 0:
        w = float(np.median(np.diff(x)) * 2)
    if x[-1] - x[0] < 2 * w:
        raise ValueError("spectrum must span at least two estimated linewidths")
    amp = float(g.get("amplitude", ys[i_pk] - base)) / ymax
    off = float(g.get("offset", base)) / ymax

    u = (x - x0) / w
    v = y / ymax

    def model_parts(p):
        c, gw, a, b = p
        h2 = 0.25 * gw * gw
        d = u - c
        den = d * d + h2
        L = h2 / den
        return d, h2, den, L

    def resid(p):
        _, _, _, L = model_parts(p)
        return p[3] + p[2] * L - v

    def jac(p):
        c, gw, a, b = p
        d, h2, den, L = model_parts(p)
        dL_dc = 2 * h2 * d / den**2
        dL_dg = 0.5 * gw * d * d / den**2
        return np.column_stack([a * dL_dc, a * dL_dg, L, np.ones_like(u)])

    sol = _solve(resid, jac, np.array([0.0, 1.0, amp, off]))
    c, gw, a, b = sol.p
    center = x0 + c * w
    fwhm = abs(gw) * w
    params = {"center": center, "fwhm": fwhm, "amplitude": a * ymax, "offset": b * ymax}
    unc = {
        "center": _sigma(sol.cov, 0, w),
        "fwhm": _sigma(sol.cov, 1, w),
        "amplitude": _sigma(sol.cov, 2, ymax),
        "offset": _sigma(sol.cov, 3, ymax),
    }
    significant = a > SIGNIFICANCE * unc["amplitude"] / ymax and fwhm > 0
    q = center / fwhm if fwhm > 0 else float("nan")
    q_unc = q * np.hypot(unc["center"] / center, unc["fwhm"] / fwhm) if fwhm > 0 and center else float("inf")
    msg = sol.message if significant else "peak amplitude not significant"
    return FitResult(
        "lorentzian_peak", params, unc, sol.rms * ymax, sol.ok and significant, sol.nfev,
        {"q": q, "q_uncertainty": q_unc, "axis_kind": s.axis_kind}, msg,
    )


# --------------------------------------------------------------------------
# reflection dip


def fit_reflection_dip(
    s: Spectrum, guess: dict[str, float] | None = None, axis_offset_ghz: float = 0.0
) -> FitResult:
    """Cavity reflection dip ``B (1 - (1 - R0) L(nu))`` on a frequency axis (GHz).

    Parameters are ``center`` (GHz), ``kappa`` (FWHM, GHz), ``r0`` (the
    on-resonance reflection relative to the baseline) and ``baseline``.
    Derived: ``contrast = 1 - r0`` and the loaded ``q = (center +
    axis_offset_ghz) / kappa``; pass ``axis_offset_ghz`` when the axis holds
    detunings rather than absolute frequencies.  A dip that is not
    significantly deeper than zero gives ``converged=False``.
    """
    names = ["center", "kappa", "r0", "baseline"]
    if s.axis_kind != "GHz":
        raise ValueError("reflection-dip fits need a frequency axis (axis_kind 'GHz')")
    _check_spectrum(s)
    x, y = s.axis, s.counts
    ymax = float(y.max())
    if not ymax > 0 or np.ptp(y) <= 1e-12 * ymax:
        return _unconverged("reflection_dip", names, "flat spectrum: no dip to fit")
    g = dict(guess or {})
    ys = _smooth(y)
    i_dip = int(np.argmin(ys))
    top = float(np.max(ys))
    x0 = float(g.get("center", x[i_dip]))
    w = float(g.get("kappa", _half_max_width(x, top - ys, i_dip, 0.0)))
    if not w > 0:
        w = float(np.median(np.diff(x)) * 2)
    if x[-1] - x[0] < 2 * w:
        raise ValueError("spectrum must span at least two estimated linewidths")
    base = float(g.get("baseline", top)) / ymax
    r0 = float(g.get("r0", ys[i_dip] / top))

    u = (x - x0) / w
    v = y / ymax

    def parts(p):
        c, k, r, b = p
        h2 = 0.25 * k * k
        d = u - c
        den = d * d + h2
        return d, h2, den, h2 / den

    def resid(p):
        _, _, _, L = parts(p)
        return p[3] * (1 - (1 - p[2]) * L) - v

    def jac(p):
        c, k, r, b = p
        d, h2, den, L = parts(p)
        dL_dc = 2 * h2 * d / den**2
        dL_dk = 0.5 * k * d * d / den**2
        depth = 1 - r
        return np.column_stack([-b * depth * dL_dc, -b * depth * dL_dk, b * L, 1 - depth * L])

    sol = _solve(resid, jac, np.array([0.0, 1.0, r0, base]))
    c, k, r, b = sol.p
    center = x0 + c * w
    kappa = abs(k) * w
    params = {"center": center, "kappa": kappa, "r0": r, "baseline": b * ymax}
    unc = {
        "center": _sigma(sol.cov, 0, w),
        "kappa": _sigma(sol.cov, 1, w),
        "r0": _sigma(sol.cov, 2),
        "baseline": _sigma(sol.cov, 3, ymax),
    }
    significant = (1 - r) > SIGNIFICANCE * unc["r0"] and kappa > 0
    nu0 = center + axis_offset_ghz
    q = nu0 / kappa if kappa > 0 else float("nan")
    msg = sol.message if significant else "dip depth not significant (no dip)"
    derived = {
        "contrast": 1 - r,
        "contrast_uncertainty": unc["r0"],
        "q": q,
        "q_uncertainty": abs(q) * np.hypot(unc["center"] / nu0, unc["kappa"] / kappa) if kappa > 0 and nu0 else float("inf"),
    }
    return FitResult("reflection_dip", params, unc, sol.rms * ymax, sol.ok and significant, sol.nfev, derived, msg)


# --------------------------------------------------------------------------
# photon-counting histograms


def _poisson_weights(counts: np.ndarray) -> np.ndarray:
    """Residual multipliers 1/sqrt(max(counts, 1)), i.e. weights 1/max(counts, 1)."""
    return 1.0 / np.sqrt(np.maximum(counts, 1.0))


def default_lifetime_start(h: TimeTrace) -> float:
    """Histogram peak plus two bins, skipping the instrument response."""
    return float(h.t[int(np.argmax(np.real(h.values)))] + 2 * h.dt)


def fit_exponential_lifetime(h: TimeTrace, t_start: float | None = None) -> FitResult:
    """Single exponential ``A exp(-(t - t_start)/tau) + B`` on ``t >= t_start``.

    Poisson-weighted.  ``amplitude`` refers to ``t = t_start``; ``tau`` is in
    the histogram's time unit.  A histogram without a significant decay
    (constant, or too short to identify ``tau``) gives ``converged=False``.
    """
    names = ["tau", "amplitude", "offset"]
    counts = np.real(np.asarray(h.values, dtype=float))
    if np.any(counts < 0):
        raise ValueError("histogram counts must be >= 0")
    if t_start is None:
        t_start = default_lifetime_start(h)
    tail = h.after(t_start)
    t = tail.t - tail.t0
    c = np.real(np.asarray(tail.values, dtype=float))
    if len(c) < 8:
        raise ValueError("fewer than 8 histogram bins after t_start")
    cmax = float(c.max())
    if not cmax > 0 or np.ptp(c) <= 1e-12 * cmax:
        return _unconverged("exponential_lifetime", names, "constant histogram: lifetime unidentifiable")

    # initial guess: background from the last tenth, tau from the 1/e point above it
    b0 = float(np.mean(c[-max(len(c) // 10, 1):]))
    a0 = float(max(c[0] - b0, 1e-12))
    above = c - b0
    k = np.nonzero(above < above[0] / np.e)[0]
    tau0 = float(t[k[0]]) if len(k) and t[k[0]] > 0 else float(t[-1] / 3)
    wts = _poisson_weights(c) * cmax**0.5  # scale-free weights
    v = c / cmax
    ts = t / tau0

    def resid(p):
        tau, a, b = p
        return wts * (a * np.exp(-ts / tau) + b - v)

    def jac(p):
        tau, a, b = p
        e = np.exp(-ts / tau)
        return wts[:, None] * np.column_stack([a * e * ts / tau**2, e, np.ones_like(ts)])

    sol = _solve(resid, jac, np.array([1.0, a0 / cmax, b0 / cmax]))
    tau, a, b = sol.p
    params = {"tau": tau * tau0, "amplitude": a * cmax, "offset": b * cmax}
    unc = {"tau": _sigma(sol.cov, 0, tau0), "amplitude": _sigma(sol.cov, 1, cmax), "offset": _sigma(sol.cov, 2, cmax)}
    identifiable = (
        tau > 0
        and a > SIGNIFICANCE * unc["amplitude"] / cmax
        and unc["tau"] < params["tau"]
    )
    msg = sol.message if identifiable else "no significant decay: lifetime unidentifiable"
    derived = {"t_start": float(t_start), "time_unit": h.unit}
    return FitResult(
        "exponential_lifetime", params, unc, sol.rms * np.sqrt(cmax), sol.ok and identifiable, sol.nfev, derived, msg
    )


def fit_g2(h: TimeTrace, single_emitter_threshold: float = 0.5) -> FitResult:
    """Antibunching dip ``norm (1 - (1 - g2_0) exp(-|tau| / tau_c))``.

    ``h`` is a coincidence histogram against delay (its time axis is the
    delay, centred near zero).  Poisson-weighted.  The single-emitter verdict
    in ``derived`` is ``g2_0 + uncertainty < single_emitter_threshold``.  A
    flat histogram fits ``g2_0 = 1`` with an undetermined ``tau_c``.
    """
    names = ["g2_0", "tau_c", "norm"]
    tau = h.t
    c = np.real(np.asarray(h.values, dtype=float))
    if np.any(c < 0):
        raise ValueError("histogram counts must be >= 0")
    if len(c) < 8:
        raise ValueError("g2 histogram needs >= 8 bins")
    cmax = float(c.max())
    if not cmax > 0:
        return _unconverged("g2", names, "empty histogram")
    # normalisation from the outer quarter of delays on each side
    span = np.max(np.abs(tau))
    outer = np.abs(tau) >= 0.75 * span
    n0 = float(np.mean(c[outer])) if np.any(outer) else cmax
    i0 = int(np.argmin(np.abs(tau)))
    g0 = float(np.clip(c[i0] / n0, 0.0, 1.0)) if n0 > 0 else 0.5
    dip = n0 - _smooth(c)
    # the dip falls to half depth at |tau| = tau_c ln 2
    below = (dip < 0.5 * dip[i0]) & (np.abs(tau) > 0)
    tc0 = float(np.min(np.abs(tau[below])) / np.log(2)) if dip[i0] > 0 and np.any(below) else span / 10
    tc0 = max(tc0, h.dt)
    wts = _poisson_weights(c) * cmax**0.5
    v = c / cmax
    at = np.abs(tau) / tc0

    def resid(p):
        g, tc, nm = p
        return wts * (nm * (1 - (1 - g) * np.exp(-at / tc)) - v)

    def jac(p):
        g, tc, nm = p
        e = np.exp(-at / tc)
        return wts[:, None] * np.column_stack([nm * e, -nm * (1 - g) * e * at / tc**2, 1 - (1 - g) * e])

    sol = _solve(resid, jac, np.array([g0, 1.0, n0 / cmax]))
    g, tc, nm = sol.p
    params = {"g2_0": g, "tau_c": abs(tc) * tc0, "norm": nm * cmax}
    unc = {"g2_0": _sigma(sol.cov, 0), "tau_c": _sigma(sol.cov, 1, tc0), "norm": _sigma(sol.cov, 2, cmax)}
    flat = not (1 - g) > SIGNIFICANCE * unc["g2_0"]
    if flat:
        # no dip: Poissonian light, g2(0) = 1 and tau_c is meaningless
        params["g2_0"] = 1.0 if not np.isfinite(g) or abs(1 - g) <= SIGNIFICANCE * unc["g2_0"] else g
    verdict = bool(params["g2_0"] + unc["g2_0"] < single_emitter_threshold)
    derived = {"single_emitter": verdict, "threshold": single_emitter_threshold, "time_unit": h.unit, "no_dip": flat}
    msg = "no antibunching dip" if flat else sol.message
    return FitResult("g2", params, unc, sol.rms * np.sqrt(cmax), sol.ok, sol.nfev, derived, msg)


# --------------------------------------------------------------------------
# multi-scan analyses


@dataclass(frozen=True)
class PleStability:
    mean_linewidth_mhz: float
    max_drift_mhz: float
    drift_per_linewidth: float
    centers_mhz: tuple[float, ...]
    linewidths_mhz: tuple[float, ...]
    n_used: int
    n_excluded: int


def _to_mhz(s: Spectrum, center: float, width: float) -> tuple[float, float]:
    if s.axis_kind == "GHz":
        return center * 1e3, width * 1e3
    # nm axis: frequency = c / lambda, width to first order
    return C_NM_THZ / center * 1e6, C_NM_THZ * width / center**2 * 1e6


def ple_stability(scans: list[Spectrum]) -> PleStability:
    """Linewidth and centre drift over a time-ordered series of excitation scans.

    Each scan is normalised to its own maximum before fitting.  Scans whose
    fit does not converge are left out and counted in ``n_excluded``.
    Drift is the full range of fitted centres.
    """
    if len(scans) < 2:
        raise ValueError("need at least two scans")
    centers, widths = [], []
    excluded = 0
    for s in scans:
        norm = Spectrum(s.axis, s.counts / s.counts.max(), s.axis_kind) if s.counts.max() > 0 else s
        r = fit_lorentzian_peak(norm)
        if not r.converged:
            excluded += 1
            continue
        c, w = _to_mhz(s, r["center"], r["fwhm"])
        centers.append(c)
        widths.append(w)
    if len(centers) < 2:
        raise ValueError(f"only {len(centers)} scans could be fitted")
    mean_w = float(np.mean(widths))
    drift = float(np.max(centers) - np.min(centers))
    return PleStability(mean_w, drift, drift / mean_w, tuple(centers), tuple(widths), len(centers), excluded)


@dataclass(frozen=True)
class HysteresisResult:
    q_fwd: float
    q_bwd: float
    delta_center: float
    mean_fwhm: float
    thermo_optic_flag: bool | None  # None when either fit failed (indeterminate)


def hysteresis_check(forward: Spectrum, backward: Spectrum, threshold: float = 0.2) -> HysteresisResult:
    """Compare forward and backward scans of the same resonance.

    Flags thermo-optic distortion when the two Q values differ by more than
    ``threshold`` of their mean, or the centres differ by more than the mean
    fitted FWHM.
    """
    f = fit_lorentzian_peak(forward)
    b = fit_lorentzian_peak(backward)
    if not (f.converged and b.converged):
        nan = float("nan")
        return HysteresisResult(f.derived.get("q", nan), b.derived.get("q", nan), nan, nan, None)
    qf, qb = f["q"], b["q"]
    dc = b["center"] - f["center"]
    mw = 0.5 * (f["fwhm"] + b["fwhm"])
    flag = abs(qf - qb) / (0.5 * (qf + qb)) > threshold or abs(dc) > mw
    return HysteresisResult(qf, qb, dc, mw, bool(flag))
