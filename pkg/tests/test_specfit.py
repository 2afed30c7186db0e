from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phc_lab.specfit.data import Spectrum, TimeTrace
from phc_lab.specfit.fits import (
    FitResult,
    fit_exponential_lifetime,
    fit_g2,
    fit_lorentzian_peak,
    fit_reflection_dip,
    hysteresis_check,
    lorentzian,
    ple_stability,
)
from phc_lab.specfit.harminv import RankWarning, harmonic_inversion
from phc_lab.specfit.synthetic import (
    dip_spectrum,
    g2_histogram,
    lifetime_histogram,
    lorentzian_spectrum,
    ringdown,
)
from phc_lab.units import C_NM_THZ

NU_737_GHZ = C_NM_THZ / 737.0 * 1e3

# ------------------------------------------------------------------ Lorentzian peak


def test_noiseless_lorentzian_is_recovered_exactly():
    r = fit_lorentzian_peak(lorentzian_spectrum(737.0, 1.83e5))
    assert r.converged
    assert r["center"] == pytest.approx(737.0, rel=1e-6)
    assert r["fwhm"] == pytest.approx(737.0 / 1.83e5, rel=1e-6)
    assert r["amplitude"] == pytest.approx(1.0, rel=1e-6)
    assert r["offset"] == pytest.approx(0.0, abs=1e-6)
    assert r["q"] == pytest.approx(1.83e5, rel=1e-6)


@given(st.floats(700, 1600), st.floats(1e3, 1e6), st.floats(0.1, 1e4), st.floats(0, 0.5))
@settings(max_examples=40, deadline=None)
def test_lorentzian_fit_inverts_its_generator(center, q, amp, off_frac):
    r = fit_lorentzian_peak(lorentzian_spectrum(center, q, amp, off_frac * amp))
    assert r.converged
    assert r["q"] == pytest.approx(q, rel=1e-6)
    assert r["center"] == pytest.approx(center, rel=1e-6)
    assert r["amplitude"] == pytest.approx(amp, rel=1e-6)


def noisy_q_trials(n_trials=100, noise=0.05, q=1.83e5, n=200):
    qs, unc = [], []
    for seed in range(n_trials):
        s = lorentzian_spectrum(737.0, q, n=n, noise=noise, rng=np.random.default_rng(seed))
        r = fit_lorentzian_peak(s)
        assert r.converged
        qs.append(r["q"])
        unc.append(r["q_uncertainty"])
    return np.array(qs), np.array(unc)


def test_noisy_q_recovery_over_100_seeded_trials():
    q = 1.83e5
    qs, unc = noisy_q_trials(q=q)
    # the estimator is unbiased to within 2%
    assert abs(qs.mean() / q - 1) < 0.02
    # and its reported 1-sigma matches the trial-to-trial scatter
    assert np.median(unc) == pytest.approx(qs.std(ddof=1), rel=0.25)
    # a single 5%-noise trial lands within 2% most of the time (the scatter is ~2.3%)
    assert np.mean(np.abs(qs / q - 1) < 0.02) > 0.5


def test_uncertainty_shrinks_as_one_over_sqrt_n():
    ns = np.array([100, 400, 1600])
    mean_unc = []
    for n in ns:
        fits = [
            fit_lorentzian_peak(lorentzian_spectrum(737.0, 1e5, n=n, noise=0.05, rng=np.random.default_rng(s)))
            for s in range(20)
        ]
        mean_unc.append(np.mean([f.uncertainties["fwhm"] for f in fits]))
    slope = np.polyfit(np.log(ns), np.log(mean_unc), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_flat_spectrum_is_unconverged():
    s = Spectrum(np.linspace(736, 738, 50), np.full(50, 3.0))
    r = fit_lorentzian_peak(s)
    assert not r.converged
    assert "flat" in r.message


def test_pure_noise_spectrum_is_not_reported_as_a_peak():
    rng = np.random.default_rng(5)
    s = Spectrum(np.linspace(736, 738, 200), 10 + rng.normal(0, 0.01, 200))
    r = fit_lorentzian_peak(s)
    assert not r.converged or abs(r["amplitude"]) < 0.1


def test_too_few_samples_or_too_narrow_a_span():
    with pytest.raises(ValueError):
        fit_lorentzian_peak(lorentzian_spectrum(737.0, 1e5, n=7))
    with pytest.raises(ValueError):
        fit_lorentzian_peak(lorentzian_spectrum(737.0, 1e5, span_linewidths=1.0))


@given(st.floats(-50, 50), st.floats(0.01, 1e3))
@settings(max_examples=30, deadline=None)
def test_lorentzian_fit_is_invariant_under_offset_and_scale(shift, k):
    s = lorentzian_spectrum(737.0, 1e5, 2.0, 0.3, noise=0.05, rng=np.random.default_rng(1))
    ref = fit_lorentzian_peak(s)
    moved = fit_lorentzian_peak(Spectrum(s.axis + shift, s.counts * k))
    assert moved["center"] - shift == pytest.approx(ref["center"], rel=1e-12, abs=1e-9 * ref["fwhm"])
    assert moved["fwhm"] == pytest.approx(ref["fwhm"], rel=1e-9)
    assert moved["amplitude"] / k == pytest.approx(ref["amplitude"], rel=1e-9)
    scaled = fit_lorentzian_peak(Spectrum(s.axis, s.counts * k))
    assert scaled["q"] == pytest.approx(ref["q"], rel=1e-9)


# ------------------------------------------------------------------ reflection dip


def test_dip_recovers_contrast_and_loaded_q():
    r = fit_reflection_dip(dip_spectrum(NU_737_GHZ, 8.4e4, 1 - 0.954))
    assert r.converged
    assert r["r0"] == pytest.approx(0.046, abs=1e-4)
    assert r["q"] == pytest.approx(8.4e4, rel=1e-3)
    assert r["contrast"] == pytest.approx(0.954, abs=1e-4)


def test_noiseless_dip_recovery_below_1e_minus_6():
    r = fit_reflection_dip(dip_spectrum(NU_737_GHZ, 8.4e4, 0.046, baseline=3.0))
    for k, v in {"center": NU_737_GHZ, "kappa": NU_737_GHZ / 8.4e4, "r0": 0.046, "baseline": 3.0}.items():
        assert r[k] == pytest.approx(v, rel=1e-6)


def test_full_contrast_dip():
    r = fit_reflection_dip(dip_spectrum(NU_737_GHZ, 8.4e4, 0.0))
    assert r.converged
    assert r["contrast"] == pytest.approx(1.0, abs=1e-9)


def test_no_dip_is_flagged():
    r = fit_reflection_dip(dip_spectrum(NU_737_GHZ, 8.4e4, 1.0))
    assert not r.converged
    noisy = fit_reflection_dip(dip_spectrum(NU_737_GHZ, 8.4e4, 1.0, noise=0.01, rng=np.random.default_rng(2)))
    assert not noisy.converged


def test_dip_needs_a_frequency_axis():
    s = dip_spectrum(NU_737_GHZ, 8.4e4, 0.05)
    with pytest.raises(ValueError):
        fit_reflection_dip(Spectrum(s.axis, s.counts, "nm"))


@given(st.floats(-20.0, 20.0), st.floats(0.01, 100.0))
@settings(max_examples=30, deadline=None)
def test_dip_fit_is_invariant_under_offset_and_scale(shift, k):
    s = dip_spectrum(NU_737_GHZ, 8.4e4, 0.05, noise=0.01, rng=np.random.default_rng(4))
    ref = fit_reflection_dip(s)
    moved = fit_reflection_dip(Spectrum(s.axis + shift, s.counts * k, "GHz"))
    assert moved["center"] - shift == pytest.approx(ref["center"], rel=1e-12, abs=1e-9 * ref["kappa"])
    assert moved["kappa"] == pytest.approx(ref["kappa"], rel=1e-9)
    assert moved["contrast"] == pytest.approx(ref["contrast"], rel=1e-9)


# ------------------------------------------------------------------ harmonic inversion


def test_single_mode_ringdown():
    f, q = 406.8, 1e5
    tr = ringdown([(f, q, 1.0)], dt=0.05, n=20000)
    (m,) = harmonic_inversion(tr, (400, 414), max_modes=1)
    assert m.frequency_thz == pytest.approx(f, rel=1e-4)
    assert m.q == pytest.approx(q, rel=0.01)


@pytest.mark.parametrize("q", [1e2, 1e3, 1e4, 1e5, 3e5, 1e6])
def test_harmonic_inversion_q_up_to_1e6(q):
    tr = ringdown([(406.8, q, 1.0)], dt=0.05, n=20000)
    modes = harmonic_inversion(tr, (380, 430), max_modes=2)
    best = max(modes, key=lambda m: m.amplitude)
    assert best.q == pytest.approx(q, rel=0.01)


def test_undamped_tone_is_lossless():
    tr = ringdown([(406.8, np.inf, 1.0)], dt=0.05, n=5000)
    (m,) = harmonic_inversion(tr, (400, 414), max_modes=1)
    assert m.lossless and m.q == np.inf


def test_two_modes_ten_linewidths_apart():
    f1, q = 400.0, 2e4
    f2 = f1 + 10 * f1 / q
    tr = ringdown([(f1, q, 1.0), (f2, q, 0.7)], dt=0.05, n=40000)
    modes = harmonic_inversion(tr, (395, 405), max_modes=2)
    assert len(modes) == 2
    for m, f in zip(modes, (f1, f2)):
        assert m.frequency_thz == pytest.approx(f, rel=1e-5)
        assert m.q == pytest.approx(q, rel=0.01)


def test_rank_deficiency_warns_and_returns_fewer_modes():
    tr = ringdown([(406.8, 1e4, 1.0)], dt=0.05, n=40000, complex_valued=True)
    with pytest.warns(RankWarning):
        modes = harmonic_inversion(tr, (400, 414), max_modes=4)
    assert 1 <= len(modes) < 4


def test_harmonic_inversion_rejects_short_traces_and_bad_bands():
    with pytest.raises(ValueError):
        harmonic_inversion(ringdown([(400, 1e3, 1)], 0.05, 150), (390, 410))
    with pytest.raises(ValueError):
        harmonic_inversion(ringdown([(400, 1e3, 1)], 0.05, 500), (410, 390))


@pytest.mark.parametrize("q", [5e3, 5e4])
def test_ringdown_and_spectrum_give_the_same_q(q):
    f, dt = 406.8, 1.0  # THz, fs
    tau_ps = q / (np.pi * f)
    n = int(10 * tau_ps * 1e3 / dt)
    tr = ringdown([(f, q, 1.0)], dt=dt, n=n, complex_valued=True)
    q_time = max(harmonic_inversion(tr, (f * 0.98, f * 1.02), max_modes=1), key=lambda m: m.amplitude).q
    # power spectrum of the same decaying field
    n_fft = 1 << int(np.ceil(np.log2(16 * n)))
    y = np.fft.fftshift(np.abs(np.fft.fft(tr.values, n_fft)) ** 2)
    freqs = np.fft.fftshift(np.fft.fftfreq(n_fft, dt * 1e-3))
    sel = np.abs(freqs - f) < 5 * f / q
    q_freq = fit_lorentzian_peak(Spectrum(freqs[sel] * 1e3, y[sel] / y[sel].max(), "GHz"))["q"]
    assert q_time == pytest.approx(q, rel=1e-3)
    assert q_time == pytest.approx(q_freq, rel=0.01)


# ------------------------------------------------------------------ lifetime


@pytest.mark.parametrize("tau", [0.47, 1.3])
def test_lifetime_recovery_with_poisson_noise(tau):
    errs = []
    for seed in range(10):
        h = lifetime_histogram(tau, 1e4, n_bins=1000, rng=np.random.default_rng(seed))
        r = fit_exponential_lifetime(h)
        assert r.converged
        errs.append(r["tau"] / tau - 1)
    assert np.max(np.abs(errs)) < 0.03


def test_constant_histogram_is_unconverged():
    h = TimeTrace(np.full(200, 30.0), 0.016, 0.0, "ns")
    assert not fit_exponential_lifetime(h, t_start=0.1).converged


# Poisson weights 1/max(counts, 1) are scale-free only while every scaled
# bin stays at or above one count, so the counts are only scaled up here.
@given(st.floats(-5, 5), st.floats(1.0, 100))
@settings(max_examples=20, deadline=None)
def test_lifetime_is_invariant_under_time_offset_and_count_scale(shift, k):
    h = lifetime_histogram(0.47, 1e4, rng=None)
    ref = fit_exponential_lifetime(h)
    moved = fit_exponential_lifetime(TimeTrace(h.values * k, h.dt, h.t0 + shift, "ns"))
    assert moved["tau"] == pytest.approx(ref["tau"], rel=1e-9)


# ------------------------------------------------------------------ g2


def test_g2_recovery_at_measured_like_parameters():
    vals = []
    for seed in range(20):
        r = fit_g2(g2_histogram(0.31, 2.0, 200.0, rng=np.random.default_rng(seed)))
        vals.append(r["g2_0"])
        assert abs(r["g2_0"] - 0.31) <= 0.05
        assert r.derived["single_emitter"]
    assert np.mean(vals) == pytest.approx(0.31, abs=0.02)


def test_flat_g2_histogram_is_poissonian():
    r = fit_g2(TimeTrace(np.full(1001, 150.0), 0.1, -50.0, "ns"))
    assert r["g2_0"] == 1.0
    assert not r.derived["single_emitter"]


def test_perfect_antibunching_is_single_emitter():
    r = fit_g2(g2_histogram(0.0, 2.0, 500.0, rng=np.random.default_rng(0)))
    assert r["g2_0"] == pytest.approx(0.0, abs=0.05)
    assert r.derived["single_emitter"]


@given(st.floats(-3, 3), st.floats(0.1, 100))
@settings(max_examples=20, deadline=None)
def test_g2_is_invariant_under_count_scale(shift, k):
    h = g2_histogram(0.31, 2.0, 200.0)
    ref = fit_g2(h)
    scaled = fit_g2(TimeTrace(h.values * k, h.dt, h.t0, "ns"))
    assert scaled["g2_0"] == pytest.approx(ref["g2_0"], rel=1e-9)
    assert scaled["tau_c"] == pytest.approx(ref["tau_c"], rel=1e-9)
    assert shift == shift  # delay offsets move the dip off zero, so only the scale is varied


# ------------------------------------------------------------------ PLE and hysteresis


def ple_scan(center_ghz, fwhm_mhz=605.0, noise=0.0, rng=None):
    x = center_ghz + np.linspace(-3, 3, 241)
    y = lorentzian(x, center_ghz, fwhm_mhz / 1e3, 1.0, 0.02)
    if noise:
        y = np.clip(y + rng.normal(0, noise, len(x)), 0, None)
    return Spectrum(x, y, "GHz")


def test_identical_scans_do_not_drift():
    p = ple_stability([ple_scan(406_000.0)] * 5)
    assert p.max_drift_mhz == 0.0
    assert p.mean_linewidth_mhz == pytest.approx(605.0, rel=1e-6)


def test_jitter_well_below_a_linewidth():
    rng = np.random.default_rng(11)
    scans = [ple_scan(406_000.0 + rng.normal(0, 0.05), noise=0.02, rng=rng) for _ in range(24)]
    p = ple_stability(scans)
    assert p.n_used == 24
    assert p.drift_per_linewidth < 1


def test_two_scans_one_ghz_apart():
    p = ple_stability([ple_scan(406_000.0), ple_scan(406_001.0)])
    assert p.max_drift_mhz == pytest.approx(1000.0, abs=1e-3)


def test_unfittable_scans_are_excluded_and_counted():
    flat = Spectrum(np.linspace(406_000 - 3, 406_000 + 3, 241), np.ones(241), "GHz")
    p = ple_stability([ple_scan(406_000.0), flat, ple_scan(406_000.2)])
    assert (p.n_used, p.n_excluded) == (2, 1)
    with pytest.raises(ValueError):
        ple_stability([ple_scan(406_000.0)])


def test_identical_forward_and_backward_scans():
    s = lorentzian_spectrum(737.0, 8.4e4)
    h = hysteresis_check(s, s)
    assert h.q_fwd == h.q_bwd
    assert h.thermo_optic_flag is False


def test_q_spread_within_the_accepted_range_is_not_flagged():
    h = hysteresis_check(lorentzian_spectrum(737.0, 7.8e4), lorentzian_spectrum(737.0, 9.1e4))
    assert h.thermo_optic_flag is False


def test_sawtooth_distorted_backward_scan_is_flagged():
    fwd = lorentzian_spectrum(737.0, 8.4e4, span_linewidths=12, n=400)
    x = fwd.axis
    fwhm = 737.0 / 8.4e4
    # thermal drag: a triangular line three times wider, peaking off centre
    tri = np.clip(1 - np.abs(x - (737.0 - fwhm)) / (3 * fwhm), 0, None)
    bwd = Spectrum(x, tri)
    assert hysteresis_check(fwd, bwd).thermo_optic_flag is True


def test_failed_fit_makes_hysteresis_indeterminate():
    s = lorentzian_spectrum(737.0, 8.4e4)
    flat = Spectrum(s.axis, np.ones(len(s)))
    assert hysteresis_check(s, flat).thermo_optic_flag is None


# ------------------------------------------------------------------ data formats


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum([1, 1, 2], [0, 0, 0])
    with pytest.raises(ValueError):
        Spectrum([1, 2, 3], [0, -1, 0])
    with pytest.raises(ValueError):
        Spectrum([1, 2], [0, 0, 0])
    with pytest.raises(ValueError):
        Spectrum([1, 2], [0, 0], "THz")
    with pytest.raises(ValueError):
        TimeTrace(np.ones(4), 0.0)


def test_spectrum_csv_round_trip_is_exact():
    s = dip_spectrum(NU_737_GHZ, 8.4e4, 0.046, noise=0.01, rng=np.random.default_rng(0))
    text = s.to_csv()
    assert text.startswith("# axis_kind: GHz\naxis,value\n")
    back = Spectrum.from_csv(text)
    np.testing.assert_array_equal(back.axis, s.axis)
    np.testing.assert_array_equal(back.counts, s.counts)
    assert back.axis_kind == "GHz"


def test_histogram_csv_round_trip():
    h = lifetime_histogram(0.47, 1e4, rng=np.random.default_rng(0))
    back = TimeTrace.from_histogram_csv(h.to_histogram_csv())
    np.testing.assert_array_equal(back.values, h.values)
    assert back.dt == pytest.approx(h.dt, rel=1e-12)
    with pytest.raises(ValueError):
        TimeTrace.from_histogram_csv("t_ns,counts\n0,1\n1,1\n3,1\n")


def test_trace_csv_round_trip():
    tr = ringdown([(400.0, 1e3, 1.0)], dt=0.05, n=300)
    back = TimeTrace.from_csv(tr.to_csv())
    np.testing.assert_array_equal(back.values, tr.values)
    assert back.dt == pytest.approx(tr.dt, rel=1e-9)


def test_fit_result_json_round_trip():
    r = fit_lorentzian_peak(lorentzian_spectrum(737.0, 1.83e5, noise=0.02, rng=np.random.default_rng(0)))
    back = FitResult.from_json(r.to_json())
    assert back.params == r.params
    assert back.uncertainties == r.uncertainties
    assert back.converged == r.converged
    assert back.to_json() == r.to_json()


def test_unconverged_fit_serialises_nan_as_null():
    r = fit_lorentzian_peak(Spectrum(np.linspace(0, 1, 20), np.ones(20)))
    assert '"value": null' in r.to_json()


def test_negative_uncertainty_is_rejected():
    with pytest.raises(ValueError):
        FitResult("x", {"a": 1.0}, {"a": -1.0}, 0.0, True, 1)


def test_quiet_warnings_for_full_suite():
    # harmonic inversion on a clean single tone requests one mode: no rank warning
    with warnings.catch_warnings():
        warnings.simplefilter("error", RankWarning)
        harmonic_inversion(ringdown([(406.8, 1e4, 1.0)], 0.05, 40000), (400, 414), max_modes=1)
