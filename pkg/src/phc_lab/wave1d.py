"""Normal-incidence 1D optics: transfer matrices, Bragg band edges and slab effective index.

These are closed-form or bisection-based models. They serve as oracles for
the time-domain solver and supply the effective index used by the 2D models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class Layer:
    n: float
    t: float  # nm

    def __post_init__(self) -> None:
        if not self.n >= 1:
            raise ValueError(f"layer index must be real and >= 1, got {self.n}")
        if not self.t > 0:
            raise ValueError(f"layer thickness must be > 0 nm, got {self.t}")


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers between two semi-infinite media.

    ``exit_n`` defaults to ``ambient_n``; set it to model a stack on a
    substrate (or a bare interface, with no layers at all).
    """

    layers: tuple[Layer, ...] = ()
    ambient_n: float = 1.0
    exit_n: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(
            l if isinstance(l, Layer) else Layer(*l) for l in self.layers
        ))
        if self.ambient_n < 1 or (self.exit_n is not None and self.exit_n < 1):
            raise ValueError("ambient indices must be >= 1")

    @property
    def n_exit(self) -> float:
        return self.ambient_n if self.exit_n is None else self.exit_n

    @property
    def thickness(self) -> float:
        return float(sum(l.t for l in self.layers))

    def scaled(self, s: float) -> "LayerStack":
        return LayerStack(tuple(Layer(l.n, l.t * s) for l in self.layers), self.ambient_n, self.exit_n)

    def rotated(self, k: int) -> "LayerStack":
        k %= max(len(self.layers), 1)
        return LayerStack(self.layers[k:] + self.layers[:k], self.ambient_n, self.exit_n)

    def __add__(self, other: "LayerStack") -> "LayerStack":
        return LayerStack(self.layers + other.layers, self.ambient_n, self.exit_n)

    def __mul__(self, n: int) -> "LayerStack":
        return LayerStack(self.layers * n, self.ambient_n, self.exit_n)


def quarter_wave_stack(n_high: float, n_low: float, wavelength_nm: float, pairs: int, ambient_n: float = 1.0) -> LayerStack:
    hl = (Layer(n_high, wavelength_nm / (4 * n_high)), Layer(n_low, wavelength_nm / (4 * n_low)))
    return LayerStack(hl * pairs, ambient_n)


def characteristic_matrix(stack: LayerStack, wavelength_nm: float) -> np.ndarray:
    """Product of the layer characteristic matrices (tangential E, H) across the stack.

    Each layer contributes ``[[cos d, -i sin d / n], [-i n sin d, cos d]]`` with
    ``d = 2 pi n t / lambda``; every factor has unit determinant.
    """
    if not wavelength_nm > 0:
        raise ValueError("wavelength must be > 0")
    m = np.eye(2, dtype=complex)
    k0 = 2 * np.pi / wavelength_nm
    for layer in stack.layers:
        d = k0 * layer.n * layer.t
        c, s = np.cos(d), np.sin(d)
        m = m @ np.array([[c, -1j * s / layer.n], [-1j * layer.n * s, c]])
    return m


@dataclass(frozen=True)
class TransferResult:
    matrix: np.ndarray
    r: complex
    t: complex
    R: float
    T: float


def transfer_matrix(stack: LayerStack, wavelength_nm: float) -> TransferResult:
    """Normal-incidence response of ``stack`` illuminated from the ambient side."""
    m = characteristic_matrix(stack, wavelength_nm)
    n0, ns = stack.ambient_n, stack.n_exit
    (m11, m12), (m21, m22) = m
    denom = n0 * m11 + n0 * ns * m12 + m21 + ns * m22
    r = (n0 * m11 + n0 * ns * m12 - m21 - ns * m22) / denom
    t = 2 * n0 / denom
    return TransferResult(m, complex(r), complex(t), float(abs(r) ** 2), float(ns / n0 * abs(t) ** 2))


def dbr_reflectance(n_high: float, n_low: float, pairs: int, n_ambient: float = 1.0, n_exit: float = 1.0) -> float:
    """Closed-form peak reflectance of a quarter-wave (HL)^N stack."""
    x = n_exit * n_high ** (2 * pairs)
    y = n_ambient * n_low ** (2 * pairs)
    return ((x - y) / (x + y)) ** 2


def _bisect(f, lo: float, hi: float, flo: float | None = None) -> float:
    flo = f(lo) if flo is None else flo
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or (hi - lo) < BISECT_TOL * max(1.0, abs(mid)):
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BandEdge:
    wavelength_nm: float
    gap_above: bool  # True if the interval just above this wavelength is a stop band


def bloch_trace(cell: LayerStack, wavelength_nm: float) -> float:
    return float(np.trace(characteristic_matrix(cell, wavelength_nm)).real)


def bragg_band_edges(cell: LayerStack, wavelength_range: tuple[float, float], n_samples: int = 2001) -> list[BandEdge]:
    """Band edges of the periodic medium built from one unit cell.

    Bloch waves propagate where ``|tr M| <= 2``.  The trace is scanned on a
    uniform wavelength grid and each crossing of ``|tr M| = 2`` is refined
    by bisection.
    """
    lo, hi = map(float, wavelength_range)
    if not (0 < lo < hi) or n_samples < 2:
        raise ValueError(f"degenerate wavelength range {wavelength_range!r}")

    def g(lam: float) -> float:
        return abs(bloch_trace(cell, lam)) - 2.0

    grid = np.linspace(lo, hi, n_samples)
    vals = np.array([g(x) for x in grid])
    edges = []
    for i in range(n_samples - 1):
        a, b = vals[i], vals[i + 1]
        if (a > 0) != (b > 0):
            lam = _bisect(g, grid[i], grid[i + 1], a)
            edges.append(BandEdge(lam, gap_above=b > 0))
    return edges


def bragg_gaps(cell: LayerStack, wavelength_range: tuple[float, float], n_samples: int = 2001) -> list[tuple[float, float]]:
    """Stop bands as (lo, hi) wavelength intervals, clipped to the scanned range."""
    lo, hi = wavelength_range
    edges = bragg_band_edges(cell, wavelength_range, n_samples)
    gaps = []
    start = lo if abs(bloch_trace(cell, lo)) > 2 else None
    for e in edges:
        if e.gap_above:
            start = e.wavelength_nm
        elif start is not None:
            gaps.append((start, e.wavelength_nm))
            start = None
    if start is not None:
        gaps.append((start, hi))
    return gaps


def _te0_residual(n_eff: float, n_core: float, n_clad: float, d: float, k0: float) -> float:
    kappa = k0 * np.sqrt(n_core**2 - n_eff**2)
    gamma = k0 * np.sqrt(n_eff**2 - n_clad**2)
    return kappa * d / 2 - np.arctan2(gamma, kappa)


def slab_neff(n_core: float, n_clad: float, d_nm: float, wavelength_nm: float) -> float:
    """Effective index of the TE0 mode of a symmetric slab, by bisection.

    Solves ``tan(kappa d / 2) = gamma / kappa`` on its fundamental branch,
    written as ``kappa d / 2 - atan(gamma / kappa) = 0`` which is monotone in
    ``n_eff`` on ``(n_clad, n_core)``.
    """
    if not n_core > n_clad >= 1:
        raise ValueError(f"need n_core > n_clad >= 1, got {n_core}, {n_clad}")
    if not (d_nm > 0 and wavelength_nm > 0):
        raise ValueError("thickness and wavelength must be > 0")
    k0 = 2 * np.pi / wavelength_nm

    def f(n: float) -> float:
        return _te0_residual(n, n_core, n_clad, d_nm, k0)

    # residual is > 0 at n_clad and < 0 at n_core, and decreasing in between
    return _bisect(f, float(n_clad), float(n_core))
