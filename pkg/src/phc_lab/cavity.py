"""Resonance, Q and mode volume of a hole layout from two FDTD passes.

The first pass rings the cavity with a broadband off-centre dipole and
extracts the modes from the monitor ringdowns.  The second pass repeats the
run with a running DFT at the chosen resonance, which yields the |E|^2
profile used for the mode volume and for perturbation estimates.

Source and monitor positions are fixed fractions of the lattice constant so
that a uniformly rescaled layout (with ``dx`` rescaled alike) gives the
same simulation in normalised units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .fdtd2d import FieldSnapshot, Grid2D, Monitor, SimConfig, Source, rasterize, run_fdtd
from .fdtd2d import compute_mode_volume
from .geometry import HoleList
from .specfit.data import TimeTrace
from .specfit.harminv import Mode, harmonic_inversion
from .units import C_NM_THZ, N_DIAMOND, ModeVolume
from .wave1d import slab_neff

# offsets in units of the lattice constant
SOURCE_OFFSET = (0.07, 0.075)
MONITOR_OFFSETS = ((0.13, -0.11), (0.0, 0.0))


@dataclass(frozen=True)
class CavitySettings:
    """Numerical settings for :func:`simulate_cavity`.

    ``dx_nm=None`` picks the coarsest cell allowed by the rasteriser
    (a quarter of the smallest hole radius).  ``span`` is the half-width of
    the analysed band as a fraction of the centre frequency.
    """

    center_nm: float = 737.0
    span: float = 0.15
    dx_nm: float | None = None
    steps: int = 20000
    padding_nm: float = 500.0
    courant: float = 0.5
    pml_cells: int = 12
    min_relative_amplitude: float = 0.1
    compute_volume: bool = True
    subsample: int = 4

    def validate(self) -> None:
        if not self.center_nm > 0:
            raise ValueError("center_nm must be > 0")
        if not 0 < self.span < 0.5:
            raise ValueError("span must be in (0, 0.5)")
        if self.dx_nm is not None and not self.dx_nm > 0:
            raise ValueError("dx_nm must be > 0")
        if self.steps < 1000:
            raise ValueError("steps must be >= 1000 for a usable ringdown")
        if not 0 < self.min_relative_amplitude <= 1:
            raise ValueError("min_relative_amplitude must be in (0, 1]")

    def scaled(self, s: float) -> "CavitySettings":
        """Settings for the layout rescaled by ``s`` (same normalised run)."""
        from dataclasses import replace

        return replace(
            self,
            center_nm=self.center_nm * s,
            dx_nm=None if self.dx_nm is None else self.dx_nm * s,
            padding_nm=self.padding_nm * s,
        )


@dataclass
class CavityRun:
    wavelength_nm: float
    frequency_thz: float
    q: float
    mode_volume: ModeVolume | None
    modes: list[Mode]
    grid: Grid2D
    intensity: FieldSnapshot | None
    traces: list[TimeTrace]
    n_eff: float
    h_eff_nm: float
    dt_fs: float
    settings: CavitySettings
    monitor_q: list[float] = field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        """JSON-ready digest of the run (no arrays)."""
        v = self.mode_volume
        return {
            "wavelength_nm": self.wavelength_nm,
            "frequency_thz": self.frequency_thz,
            "q": self.q if np.isfinite(self.q) else None,
            "mode_volume_lambda_over_n3": None if v is None else v.v,
            "mode_volume_n_ref": None if v is None else v.n_ref,
            "n_eff": self.n_eff,
            "h_eff_nm": self.h_eff_nm,
            "convergence": {
                "dx_nm": self.grid.dx,
                "nx": self.grid.nx,
                "ny": self.grid.ny,
                "steps": self.settings.steps,
                "dt_fs": self.dt_fs,
                "q_per_monitor": [q if np.isfinite(q) else None for q in self.monitor_q],
                "modes_in_band": len(self.modes),
            },
        }


def _lattice_constant(h: HoleList, dx: float) -> float:
    a = h.metadata.get("a_nm")
    return float(a) if a else 16.0 * dx


def pick_resonance(modes: list[Mode], min_relative_amplitude: float = 0.1) -> Mode | None:
    """Highest-Q mode among those carrying a reasonable share of the ringdown."""
    if not modes:
        return None
    top = max(m.amplitude for m in modes)
    strong = [m for m in modes if m.amplitude >= min_relative_amplitude * top]
    return max(strong, key=lambda m: (m.q if np.isfinite(m.q) else np.inf, m.amplitude))


def simulate_cavity(
    h: HoleList,
    settings: CavitySettings = CavitySettings(),
    n_eff: float | None = None,
    h_eff_nm: float | None = None,
) -> CavityRun:
    """Resonant wavelength, Q and (optionally) mode volume of a layout.

    ``n_eff`` defaults to the TE0 index of the layout's film (thickness from
    ``h.metadata['thickness_nm']``, 160 nm otherwise) at ``center_nm``;
    ``h_eff_nm`` defaults to that thickness.
    """
    settings.validate()
    thickness = float(h.metadata.get("thickness_nm", 160.0))
    if n_eff is None:
        n_eff = slab_neff(N_DIAMOND, 1.0, thickness, settings.center_nm)
    if h_eff_nm is None:
        h_eff_nm = thickness
    rmin = float(h.r[h.r > 0].min()) if np.any(h.r > 0) else 64.0
    dx = settings.dx_nm if settings.dx_nm is not None else rmin / 4
    grid = rasterize(h, n_eff, dx, settings.padding_nm, subsample=settings.subsample)

    a = _lattice_constant(h, dx)
    fc = C_NM_THZ / settings.center_nm
    band = (fc * (1 - settings.span), fc * (1 + settings.span))
    # Gaussian spectrum covering the analysed band at about two standard deviations
    src = Source(SOURCE_OFFSET[0] * a, SOURCE_OFFSET[1] * a, fc, fc * settings.span / 2, "Ey")
    monitors = tuple(Monitor(mx * a, my * a, "Ey") for mx, my in MONITOR_OFFSETS)
    cfg = SimConfig(
        src,
        settings.steps,
        courant=settings.courant,
        pml_cells=settings.pml_cells,
        monitors=monitors,
    )
    res = run_fdtd(grid, cfg)
    t_start = 1.5 * src.turn_off_fs

    per_monitor = [harmonic_inversion(tr.after(t_start), band, max_modes=8) for tr in res.traces]
    modes = per_monitor[0]
    best = pick_resonance(modes, settings.min_relative_amplitude)
    if best is None:
        raise RuntimeError("no resonance found in the analysed band")
    monitor_q = []
    for ms in per_monitor:
        near = [m for m in ms if abs(m.frequency_thz - best.frequency_thz) < 1e-3 * best.frequency_thz]
        monitor_q.append(max((m.q for m in near), default=float("nan")))

    f_res = best.frequency_thz
    lam = C_NM_THZ / f_res
    intensity = None
    volume = None
    if settings.compute_volume:
        cfg2 = SimConfig(
            src,
            settings.steps,
            courant=settings.courant,
            pml_cells=settings.pml_cells,
            dft_frequencies_thz=(f_res,),
            dft_start_step=int(np.ceil(t_start / res.dt_fs)),
        )
        intensity = run_fdtd(grid, cfg2).dft_intensity(f_res)
        volume = compute_mode_volume(intensity, grid, h_eff_nm, lam, N_DIAMOND)

    return CavityRun(
        wavelength_nm=lam,
        frequency_thz=f_res,
        q=best.q,
        mode_volume=volume,
        modes=modes,
        grid=grid,
        intensity=intensity,
        traces=res.traces,
        n_eff=float(n_eff),
        h_eff_nm=h_eff_nm,
        dt_fs=res.dt_fs,
        settings=settings,
        monitor_q=monitor_q,
    )
