"""Sampled spectra and time traces, with their CSV forms."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

TIME_UNITS_PS = {"fs": 1e-3, "ps": 1.0, "ns": 1e3}


@dataclass
class Spectrum:
    """Intensity on a strictly increasing axis; ``axis_kind`` is ``"nm"`` or ``"GHz"``."""

    axis: np.ndarray
    counts: np.ndarray
    axis_kind: str = "nm"

    def __post_init__(self) -> None:
        self.axis = np.asarray(self.axis, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.axis_kind not in ("nm", "GHz"):
            raise ValueError(f"axis_kind must be 'nm' or 'GHz', got {self.axis_kind!r}")
        if self.axis.shape != self.counts.shape or self.axis.ndim != 1:
            raise ValueError("axis and counts must be 1D arrays of equal length")
        if np.any(np.diff(self.axis) <= 0):
            raise ValueError("spectrum axis must be strictly increasing")
        if np.any(self.counts < 0):
            raise ValueError("spectrum counts must be >= 0")

    def __len__(self) -> int:
        return len(self.axis)

    def to_csv(self) -> str:
        lines = [f"# axis_kind: {self.axis_kind}", "axis,value"]
        lines += [f"{float(a)!r},{float(v)!r}" for a, v in zip(self.axis, self.counts)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        kind = "nm"
        body = []
        for line in text.splitlines():
            s = line.strip()
            if s.startswith("#"):
                key, _, val = s[1:].partition(":")
                if key.strip() == "axis_kind":
                    kind = val.strip()
            elif s:
                body.append(s)
        rows = list(csv.reader(body))
        if not rows or [c.strip() for c in rows[0]] != ["axis", "value"]:
            raise ValueError("spectrum CSV needs an 'axis,value' header")
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, 2)
        if len(data) == 0:
            raise ValueError("spectrum CSV holds no samples")
        return cls(data[:, 0], data[:, 1], kind)


@dataclass
class TimeTrace:
    """Uniformly sampled signal (real or complex).

    ``unit`` names the time unit of ``t0`` and ``dt``: ``"fs"`` for solver
    records, ``"ns"`` for photon-counting histograms.
    """

    values: np.ndarray
    dt: float
    t0: float = 0.0
    unit: str = "ns"
    label: str = ""

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if not self.dt > 0:
            raise ValueError("TimeTrace needs a uniform dt > 0")
        if self.unit not in TIME_UNITS_PS:
            raise ValueError(f"unknown time unit {self.unit!r}")

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def after(self, t_start: float) -> "TimeTrace":
        k = max(int(np.ceil((t_start - self.t0) / self.dt - 1e-9)), 0)
        return TimeTrace(self.values[k:], self.dt, self.t0 + k * self.dt, self.unit, self.label)

    def to_csv(self) -> str:
        """Solver trace form: ``step,time_fs,value``."""
        scale = TIME_UNITS_PS[self.unit] * 1e3
        lines = ["step,time_fs,value"]
        for k, v in enumerate(np.real(self.values)):
            lines.append(f"{k},{float((self.t0 + k * self.dt) * scale)!r},{float(v)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "TimeTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty trace CSV")
        t = np.array([float(r["time_fs"]) for r in rows])
        v = np.array([float(r["value"]) for r in rows])
        dt = (t[-1] - t[0]) / (len(t) - 1) if len(t) > 1 else 1.0
        return cls(v, dt, t[0], "fs")

    def to_histogram_csv(self) -> str:
        scale = TIME_UNITS_PS[self.unit] / TIME_UNITS_PS["ns"]
        lines = ["t_ns,counts"] + [
            f"{float(t * scale)!r},{float(v)!r}" for t, v in zip(self.t, np.real(self.values))
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_histogram_csv(cls, text: str) -> "TimeTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        if len(rows) < 2:
            raise ValueError("histogram CSV needs at least two bins")
        t = np.array([float(r["t_ns"]) for r in rows])
        c = np.array([float(r["counts"]) for r in rows])
        steps = np.diff(t)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * abs(steps.mean()):
            raise ValueError("histogram bins must be uniform and increasing")
        return cls(c, float(steps.mean()), float(t[0]), "ns")
