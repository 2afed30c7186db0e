"""Synthetic spectra, ringdowns and histograms with known ground truth.

Every generator takes a ``numpy.random.Generator`` (or ``None`` for
noiseless output) so tests and demos are reproducible from a seed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from .data import Spectrum, TimeTrace
from .fits import g2_antibunching, lorentzian, reflection_dip


def lorentzian_spectrum(
    center: float,
    q: float,
    amplitude: float = 1.0,
    offset: float = 0.0,
    n: int = 200,
    span_linewidths: float = 5.0,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
    axis_kind: str = "nm",
) -> Spectrum:
    """Lorentzian peak of FWHM ``center / q`` sampled over ``span_linewidths`` FWHM.

    ``noise`` is the standard deviation of additive Gaussian noise in
    units of ``amplitude``; noisy samples are clipped at zero.
    """
    fwhm = center / q
    x = center + np.linspace(-0.5, 0.5, n) * span_linewidths * fwhm
    y = lorentzian(x, center, fwhm, amplitude, offset)
    if noise:
        if rng is None:
            raise ValueError("noise requested without a random generator")
        y = np.clip(y + rng.normal(0.0, noise * amplitude, n), 0.0, None)
    return Spectrum(x, y, axis_kind)


def dip_spectrum(
    nu0_ghz: float,
    q_loaded: float,
    r0: float,
    baseline: float = 1.0,
    n: int = 300,
    span_linewidths: float = 8.0,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Spectrum:
    """Reflection dip on an absolute frequency axis (GHz), ``kappa = nu0 / q``."""
    kappa = nu0_ghz / q_loaded
    x = nu0_ghz + np.linspace(-0.5, 0.5, n) * span_linewidths * kappa
    y = reflection_dip(x, nu0_ghz, kappa, r0, baseline)
    if noise:
        if rng is None:
            raise ValueError("noise requested without a random generator")
        y = np.clip(y + rng.normal(0.0, noise * baseline, n), 0.0, None)
    return Spectrum(x, y, "GHz")


def ringdown(
    modes: list[tuple[float, float, float]],
    dt: float,
    n: int,
    unit: str = "fs",
    complex_valued: bool = False,
    phase: float = 0.3,
) -> TimeTrace:
    """Sum of damped oscillations ``A exp(-pi f t / Q) cos(2 pi f t + phase)``.

    ``modes`` holds ``(f, q, amplitude)`` with ``f`` in the reciprocal of
    ``unit`` scaled to THz for ``fs``/``ps`` and GHz for ``ns``; pass
    ``q = inf`` for an undamped tone.
    """
    per = {"fs": 1e-3, "ps": 1.0, "ns": 1.0}[unit]
    t = np.arange(n) * dt * per
    y = np.zeros(n, dtype=complex if complex_valued else float)
    for f, q, a in modes:
        decay = 0.0 if not np.isfinite(q) else np.pi * f / q
        arg = 2 * np.pi * f * t + phase
        env = a * np.exp(-decay * t)
        y = y + (env * np.exp(1j * arg) if complex_valued else env * np.cos(arg))
    return TimeTrace(y, dt, 0.0, unit)


def lifetime_histogram(
    tau_ns: float,
    peak_counts: float,
    bin_ns: float = 0.016,
    n_bins: int = 600,
    t0_ns: float = 1.0,
    irf_sigma_ns: float = 0.03,
    background: float = 5.0,
    rng: np.random.Generator | None = None,
) -> TimeTrace:
    """Exponential decay convolved with a Gaussian instrument response.

    The noiseless shape is the exponentially modified Gaussian, scaled so
    its maximum is ``peak_counts`` above ``background``; counts are drawn
    from a Poisson distribution when ``rng`` is given.
    """
    t = np.arange(n_bins) * bin_ns
    s, u = irf_sigma_ns, t - t0_ns
    shape = np.exp(0.5 * (s / tau_ns) ** 2 - u / tau_ns) * ndtr(u / s - s / tau_ns)
    mean = peak_counts * shape / shape.max() + background
    counts = rng.poisson(mean).astype(float) if rng is not None else mean
    return TimeTrace(counts, bin_ns, 0.0, "ns", label="lifetime")


def g2_histogram(
    g2_0: float,
    tau_c_ns: float,
    norm_counts: float,
    bin_ns: float = 0.1,
    half_range_ns: float = 50.0,
    rng: np.random.Generator | None = None,
) -> TimeTrace:
    """Coincidence histogram against delay with single-exponential antibunching."""
    nb = int(round(half_range_ns / bin_ns))
    tau = np.arange(-nb, nb + 1) * bin_ns
    mean = g2_antibunching(tau, g2_0, tau_c_ns, norm_counts)
    counts = rng.poisson(mean).astype(float) if rng is not None else mean
    return TimeTrace(counts, bin_ns, float(tau[0]), "ns", label="g2")
