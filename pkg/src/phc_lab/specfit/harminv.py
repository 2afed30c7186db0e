"""Resonant modes of a ringdown signal by a filtered matrix-pencil fit.

The trace is shifted to baseband around the centre of the requested band,
low-pass filtered with a linear-phase FIR (valid part only, so every damped
exponential stays a damped exponential with the same pole), decimated, and
handed to a matrix-pencil solver.  Amplitudes are fitted by least squares on
the decimated samples and then corrected for the filter's complex gain.

Each mode is ``A exp(-pi f t / Q) cos(2 pi f t + phi)`` for a real trace and
``A exp(i (2 pi f t + phi) - pi f t / Q)`` for a complex one, so ``Q`` follows
the field-decay convention ``Q = pi f tau``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lstsq, svd
from scipy.signal import firwin

from .data import TIME_UNITS_PS, TimeTrace

Q_CAP = 1e9
MAX_PENCIL_SAMPLES = 1500


class RankWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Mode:
    frequency_thz: float
    q: float
    amplitude: float
    phase: float
    decay_per_ps: float
    lossless: bool = False

    @property
    def linewidth_thz(self) -> float:
        return self.frequency_thz / self.q if np.isfinite(self.q) else 0.0


def matrix_pencil(y: np.ndarray, n_modes: int, rcond: float = 1e-10) -> np.ndarray:
    """Signal poles z_k of ``y[n] = sum_k c_k z_k**n`` (unit sample spacing)."""
    y = np.asarray(y, dtype=complex)
    n = len(y)
    L = max(n // 3, 1)
    hank = np.lib.stride_tricks.sliding_window_view(y, L + 1)  # (n - L, L + 1)
    _, s, vh = svd(hank, full_matrices=False)
    rank = int(np.sum(s > rcond * s[0])) if s[0] > 0 else 0
    m = min(n_modes, rank)
    if m == 0:
        return np.zeros(0, dtype=complex)
    # rows of vh span the shift-invariant signal subspace: W[:, 1:] = Phi W[:, :-1]
    w = vh[:m]
    return np.linalg.eigvals(w[:, 1:] @ np.linalg.pinv(w[:, :-1]))


def harmonic_inversion(
    trace: TimeTrace,
    band_thz: tuple[float, float],
    max_modes: int = 10,
    rcond: float = 1e-8,
    min_amplitude: float = 0.0,
) -> list[Mode]:
    """Damped sinusoids in ``trace`` with frequencies inside ``band_thz``.

    ``trace`` should start after the source has switched off.  Returns modes
    sorted by frequency.  A pole on or outside the unit circle is reported as
    ``Q = inf`` with ``lossless=True``; poles with ``Q > Q_CAP`` likewise.
    """
    if len(trace) < 200:
        raise ValueError(f"harmonic inversion needs >= 200 samples, got {len(trace)}")
    f_lo, f_hi = map(float, band_thz)
    if not f_hi > f_lo:
        raise ValueError("band must be an increasing frequency interval")
    dt_ps = trace.dt * TIME_UNITS_PS[trace.unit]
    fs = 1.0 / dt_ps  # THz
    x = np.asarray(trace.values)
    is_real = not np.iscomplexobj(x)
    fc = 0.5 * (f_lo + f_hi)
    half = 0.5 * (f_hi - f_lo)
    n = np.arange(len(x))
    z = x * np.exp(-2j * np.pi * fc * dt_ps * n)

    # complex baseband only needs a sample rate above the two-sided band
    cutoff = 1.25 * half
    dec = int(max(1, np.floor(fs / (3.0 * cutoff))))
    if dec > 1:
        numtaps = min(8 * dec + 1, len(z) // 3) | 1
        h = firwin(numtaps, cutoff, fs=fs)
        y = np.convolve(z, h, mode="valid")
    else:
        numtaps = 1
        h = np.ones(1)
        y = z
    yd = y[::dec]
    if len(yd) > MAX_PENCIL_SAMPLES:
        yd = yd[:MAX_PENCIL_SAMPLES]
    if len(yd) < 3 * max_modes:
        raise ValueError("trace too short for the requested band and mode count")

    poles = matrix_pencil(yd, max_modes, rcond)
    if len(poles) < max_modes:
        warnings.warn(
            f"signal rank {len(poles)} below the requested {max_modes} modes", RankWarning, stacklevel=2
        )
    if len(poles) == 0:
        return []
    # amplitudes on the decimated samples, then undo the filter gain
    vand = poles[None, :] ** np.arange(len(yd))[:, None]
    c, *_ = lstsq(vand, yd)

    modes = []
    for zk, ck in zip(poles, c):
        s = np.log(zk) / (dec * dt_ps)  # per ps, relative to fc
        f = fc + s.imag / (2 * np.pi)
        if not f_lo <= f <= f_hi:
            continue
        w = np.exp(s * dt_ps)  # per original sample, baseband
        gain = np.sum(h * w ** (numtaps - 1 - np.arange(numtaps)))
        c0 = ck / gain  # baseband amplitude at the first sample
        amp = abs(c0) * (2.0 if is_real else 1.0)
        if amp < min_amplitude:
            continue
        decay = -s.real
        q = np.pi * f / decay if decay > 0 else np.inf
        lossless = not q <= Q_CAP
        if lossless:
            q = np.inf
        # phase referenced to t = t0 (the first sample)
        modes.append(Mode(float(f), float(q), float(amp), float(np.angle(c0)), float(decay), lossless))
    modes.sort(key=lambda m: m.frequency_thz)
    return modes


def dominant_mode(modes: list[Mode], by: str = "q") -> Mode | None:
    """Highest-Q (``by="q"``) or strongest (``by="amplitude"``) mode."""
    if not modes:
        return None
    if by == "amplitude":
        return max(modes, key=lambda m: m.amplitude)
    return max(modes, key=lambda m: (m.q if np.isfinite(m.q) else Q_CAP * 10, m.amplitude))
