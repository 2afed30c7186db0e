"""Solver sanity checks against closed-form or independent oracles.

Each check builds a small dedicated problem, runs the FDTD engine and
returns a frozen record holding the measured value, the reference and the
relative error, so the same numbers can be asserted in tests and embedded
in CLI summaries.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import hilbert

from .fdtd2d import Grid2D, Monitor, SimConfig, Source, run_fdtd
from .specfit.harminv import harmonic_inversion
from .units import C_NM_PER_FS, C_NM_THZ, N_DIAMOND
from .wave1d import Layer, LayerStack, slab_neff, transfer_matrix


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    reference: float
    detail: dict

    @property
    def rel_error(self) -> float:
        return self.measured / self.reference - 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rel_error"] = self.rel_error
        return d


def _envelope_peak(v: np.ndarray) -> float:
    """Sub-sample index of the analytic-signal envelope maximum."""
    e = np.abs(hilbert(v))
    i = int(np.argmax(e))
    y0, y1, y2 = e[i - 1 : i + 2]
    return i + 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2)


def pulse_speed_check(
    cells_per_wavelength: float = 20.0,
    courant: float = 0.5,
    center_thz: float = 400.0,
    bandwidth_thz: float = 40.0,
) -> CheckResult:
    """Group delay of a plane pulse over 250 cells in vacuum.

    The cell is sized so that ``cells_per_wavelength`` cells span the
    wavelength at ``center + 2 * bandwidth``, the upper edge of the pulse
    spectrum.  Measured quantity: propagation speed in nm/fs.
    """
    dx = C_NM_PER_FS * 1e3 / (center_thz + 2 * bandwidth_thz) / cells_per_wavelength
    g = Grid2D.uniform(500, 16, dx)
    src = Source(g.x0 + 40 * dx, 0.0, center_thz, bandwidth_thz, "Hz", line=True)
    length = 250 * dx
    mons = (Monitor(g.x0 + 100 * dx, 0.0, "Hz"), Monitor(g.x0 + 100 * dx + length, 0.0, "Hz"))
    dt = courant / np.sqrt(2) * dx / C_NM_PER_FS
    steps = int((length / C_NM_PER_FS + 2 * src.turn_off_fs + 60 * dx / C_NM_PER_FS) / dt)
    r = run_fdtd(g, SimConfig(src, steps, courant=courant, pml_axes=("x",), monitors=mons))
    delay = (_envelope_peak(r.traces[1].values) - _envelope_peak(r.traces[0].values)) * r.dt_fs
    return CheckResult(
        "vacuum pulse speed",
        length / delay,
        C_NM_PER_FS,
        {"dx_nm": dx, "courant": courant, "steps": steps, "distance_nm": length},
    )


def pml_return_db(pml_cells: int = 12, cells_per_wavelength: float = 20.0) -> CheckResult:
    """Peak reflected over peak incident amplitude (dB) 50 cells from a PML.

    ``measured`` is the return in dB; ``reference`` is the -40 dB budget.
    """
    fc, bw = 400.0, 40.0
    dx = C_NM_PER_FS * 1e3 / (fc + 2 * bw) / cells_per_wavelength
    g = Grid2D.uniform(300, 16, dx)
    src = Source(g.x0 + 150 * dx, 0.0, fc, bw, "Hz", line=True)
    mon = (Monitor(g.x0 + 200 * dx, 0.0, "Hz"),)
    r = run_fdtd(g, SimConfig(src, 4000, pml_cells=pml_cells, pml_axes=("x",), monitors=mon))
    v = r.traces[0].values
    # the incident pulse has fully passed the monitor before the echo returns
    t_split = 50 * dx / C_NM_PER_FS + 6 * src.width_fs + 20 * dx / C_NM_PER_FS
    k = int(t_split / r.dt_fs)
    db = 20 * np.log10(np.max(np.abs(v[k:])) / np.max(np.abs(v[:k])))
    return CheckResult("PML return", float(db), -40.0, {"pml_cells": pml_cells, "dx_nm": dx, "split_step": k})


def box_energy_drift(steps: int = 12000) -> CheckResult:
    """Relative spread of the field energy in a closed, lossless PEC box
    after the source has switched off (``measured``); ``reference`` is 1."""
    g = Grid2D.uniform(60, 50, 10.0)
    g.eps[20:40, 10:30] = 4.0
    src = Source(-50.0, -30.0, 400.0, 100.0, "Ey")
    r = run_fdtd(g, SimConfig(src, steps, pml_axes=(), record_energy=True))
    e = r.energy[r.turn_off_step + 1 :]
    drift = float((e.max() - e.min()) / e[0])
    return CheckResult("closed-box energy drift", 1.0 + drift, 1.0, {"steps_after_source": len(e), "drift": drift})


@dataclass(frozen=True)
class FabryPerotCheck:
    wavelength_fdtd_nm: float
    wavelength_tmm_nm: float
    q_fdtd: float
    q_finesse: float
    mirror_reflectance: float

    @property
    def wavelength_error(self) -> float:
        return self.wavelength_fdtd_nm / self.wavelength_tmm_nm - 1.0

    @property
    def q_error(self) -> float:
        return self.q_fdtd / self.q_finesse - 1.0


def dbr_cavity_stack(n_pairs: int, dx: float = 4.0, design_nm: float = 737.0) -> tuple[LayerStack, LayerStack, float]:
    """Half-wave spacer between quarter-wave DBRs, layer thicknesses snapped to ``dx``.

    High index: the TE0 index of a 160 nm diamond film; low index: air.
    Returns the full stack, one mirror seen from inside the spacer, and the
    spacer index.
    """
    nh = slab_neff(N_DIAMOND, 1.0, 160.0, design_nm)
    th = round(design_nm / (4 * nh) / dx) * dx
    tl = round(design_nm / 4 / dx) * dx
    mirror = (Layer(1.0, tl), Layer(nh, th)) * n_pairs  # from the spacer outward
    full = LayerStack(mirror[::-1] + (Layer(nh, 2 * th),) + mirror)
    return full, LayerStack(mirror, ambient_n=nh, exit_n=1.0), nh


def fabry_perot_oracles(n_pairs: int = 3, dx: float = 4.0) -> tuple[float, float, float]:
    """Transfer-matrix resonance (nm), finesse-based Q and mirror reflectance."""
    full, mirror, nh = dbr_cavity_stack(n_pairs, dx)
    spacer = full.layers[len(full.layers) // 2].t
    lam = minimize_scalar(
        lambda l: -transfer_matrix(full, l).T, bounds=(697.0, 777.0), method="bounded", options={"xatol": 1e-9}
    ).x

    def phase(l):
        return 4 * np.pi * nh * spacer / l + 2 * np.angle(transfer_matrix(mirror, l).r)

    h = 1e-3
    w = lambda l: 2 * np.pi * C_NM_PER_FS / l  # noqa: E731
    p_hi, p_lo = np.unwrap([phase(lam + h), phase(lam - h)])
    dphi_dw = (p_hi - p_lo) / (w(lam + h) - w(lam - h))
    r = transfer_matrix(mirror, lam).R
    q = w(lam) * abs(dphi_dw) * np.sqrt(r) / (2 * (1 - r))
    return float(lam), float(q), float(r)


def fabry_perot_check(n_pairs: int = 3, dx: float = 4.0, steps: int = 60000) -> FabryPerotCheck:
    """Resonance and Q of a DBR cavity from FDTD against transfer-matrix oracles."""
    lam, q_ref, refl = fabry_perot_oracles(n_pairs, dx)
    full, _, _ = dbr_cavity_stack(n_pairs, dx)
    th = full.layers[0].t if full.layers[0].n > 1 else full.layers[1].t
    pad = 60
    nx = int(round(full.thickness / dx)) + 2 * pad + 24
    g = Grid2D.uniform(nx, 16, dx)
    xs = g.xc()
    eps = np.ones(nx)
    cur = -full.thickness / 2
    for layer in full.layers:
        eps[(xs > cur) & (xs < cur + layer.t)] = layer.n**2
        cur += layer.t
    g = Grid2D(dx, np.repeat(eps[:, None], 16, 1), g.x0, g.y0)
    f = C_NM_THZ / lam
    src = Source(0.3 * th, 0.0, f, f / 10, "Hz", line=True)
    r = run_fdtd(g, SimConfig(src, steps, pml_axes=("x",), monitors=(Monitor(-0.4 * th, 0.0, "Hz"),)))
    modes = harmonic_inversion(r.traces[0].after(1.2 * src.turn_off_fs), (0.9 * f, 1.1 * f), max_modes=4)
    best = max(modes, key=lambda m: m.amplitude)
    return FabryPerotCheck(C_NM_THZ / best.frequency_thz, lam, best.q, q_ref, refl)
