"""2D finite-difference time-domain solver, TE polarisation (Hz, Ex, Ey).

The slab is replaced by a 2D medium of its effective index.  Fields live on
a Yee grid of square cells of side ``dx``:

* ``Hz[i, j]`` at the cell centre ``(i + 1/2, j + 1/2)``
* ``Ex[i, j]`` on horizontal edges ``(i + 1/2, j)``, shape ``(nx, ny + 1)``
* ``Ey[i, j]`` on vertical edges ``(i, j + 1/2)``, shape ``(nx + 1, ny)``

Internally lengths are measured in cells and time in ``dx / c`` so that the
update coefficients are just the Courant number over the local
permittivity; fields use ``H * eta0`` so E and H share units.  The outer
boundary is a perfect electric conductor, backed by convolutional PML
layers on the chosen axes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .geometry import HoleList
from .specfit.data import TimeTrace
from .units import C_NM_PER_FS

COMPONENTS = {"eps": 0, "Ex": 1, "Ey": 2, "Hz": 3, "E2": 4}
COMPONENT_NAMES = {v: k for k, v in COMPONENTS.items()}

DIVERGENCE_FACTOR = 1e12
_DIVERGENCE_CHECK_EVERY = 50


class ConfigError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, step: int, peak: float):
        super().__init__(f"field blew up at step {step} (|field| = {peak:.3e})")
        self.step = step
        self.peak = peak


@dataclass
class Grid2D:
    """Cell-centred permittivity raster; cell (i, j) spans
    ``[x0 + i dx, x0 + (i+1) dx] x [y0 + j dx, y0 + (j+1) dx]``."""

    dx: float
    eps: np.ndarray
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self) -> None:
        self.eps = np.asarray(self.eps, dtype=float)
        if self.dx <= 0:
            raise ConfigError("dx must be > 0")
        if self.eps.ndim != 2 or min(self.eps.shape) < 16:
            raise ConfigError(f"grid must be at least 16 x 16 cells, got {self.eps.shape}")
        if self.eps.min() < 1:
            raise ConfigError("permittivity values must be >= 1")

    @property
    def nx(self) -> int:
        return self.eps.shape[0]

    @property
    def ny(self) -> int:
        return self.eps.shape[1]

    def xc(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    def yc(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dx

    def index_of(self, x: float, y: float) -> tuple[int, int]:
        i = int(np.clip(np.floor((x - self.x0) / self.dx), 0, self.nx - 1))
        j = int(np.clip(np.floor((y - self.y0) / self.dx), 0, self.ny - 1))
        return i, j

    @classmethod
    def uniform(cls, nx: int, ny: int, dx: float, eps: float = 1.0, centered: bool = True) -> "Grid2D":
        x0 = -nx * dx / 2 if centered else 0.0
        y0 = -ny * dx / 2 if centered else 0.0
        return cls(dx, np.full((nx, ny), float(eps)), x0, y0)


def rasterize(
    h: HoleList,
    n_eff: float,
    dx: float,
    padding: float,
    subsample: int = 4,
    like: Grid2D | None = None,
    enforce_resolution: bool = True,
) -> Grid2D:
    """Permittivity map of the holes in their outline, with area-averaged edge cells.

    Each cell is sampled on a ``subsample x subsample`` grid and its
    permittivity is the coverage-weighted mean of ``n_eff**2`` (material)
    and 1 (holes and everything outside the outline).  Pass ``like`` to reuse
    another grid's extent exactly.  ``enforce_resolution=False`` skips the
    ``dx <= r/4`` check, which only matters for rasters that will be
    time-stepped (a perturbation raster just needs the averaged coverage).
    """
    rmin = h.r[h.r > 0].min() if np.any(h.r > 0) else np.inf
    if enforce_resolution and dx > rmin / 4:
        raise ConfigError(f"dx = {dx} nm is coarser than r/4 = {rmin / 4} nm for the smallest hole")
    if like is not None:
        if not np.isclose(like.dx, dx):
            raise ConfigError("template grid has a different dx")
        nx, ny, x0, y0 = like.nx, like.ny, like.x0, like.y0
    else:
        o = h.outline
        cx, cy = 0.5 * (o.xmin + o.xmax), 0.5 * (o.ymin + o.ymax)
        nx = int(np.ceil((o.xmax - o.xmin + 2 * padding) / dx))
        ny = int(np.ceil((o.ymax - o.ymin + 2 * padding) / dx))
        nx, ny = max(nx, 16), max(ny, 16)
        x0, y0 = cx - nx * dx / 2, cy - ny * dx / 2

    s = subsample
    off = (np.arange(s) + 0.5) / s
    xs = x0 + (np.arange(nx)[:, None] + off[None, :]).ravel() * dx
    ys = y0 + (np.arange(ny)[:, None] + off[None, :]).ravel() * dx
    mask = h.outline.contains(xs[:, None], ys[None, :])
    for x, y, r in h.holes:
        if r <= 0:
            continue
        i0, i1 = np.searchsorted(xs, [x - r, x + r])
        j0, j1 = np.searchsorted(ys, [y - r, y + r])
        if i0 >= i1 or j0 >= j1:
            continue
        ddx = xs[i0:i1, None] - x
        ddy = ys[None, j0:j1] - y
        mask[i0:i1, j0:j1] &= ddx * ddx + ddy * ddy > r * r
    frac = mask.reshape(nx, s, ny, s).mean(axis=(1, 3))
    eps = 1.0 + (n_eff**2 - 1.0) * frac
    return Grid2D(dx, eps, x0, y0)


@dataclass(frozen=True)
class Source:
    """Gaussian-modulated sinusoid.

    ``bandwidth_thz`` is the standard deviation of the Gaussian spectrum; the
    temporal width is ``1 / (2 pi bandwidth)``, the peak sits at three widths
    and the source is switched off after six.
    """

    x: float
    y: float
    center_thz: float
    bandwidth_thz: float
    polarization: str = "Ey"
    amplitude: float = 1.0
    line: bool = False  # span the whole y extent at this x (plane-wave launch)

    def __post_init__(self) -> None:
        if self.polarization not in ("Ex", "Ey", "Hz"):
            raise ConfigError(f"unknown source polarization {self.polarization!r}")
        if not self.bandwidth_thz > 0 or not self.center_thz > 0:
            raise ConfigError("source frequency and bandwidth must be > 0")

    @property
    def width_fs(self) -> float:
        return 1e3 / (2 * np.pi * self.bandwidth_thz)

    @property
    def turn_off_fs(self) -> float:
        return 6 * self.width_fs

    def waveform(self, t_fs):
        t = np.asarray(t_fs, dtype=float)
        w = self.width_fs
        env = np.exp(-0.5 * ((t - 3 * w) / w) ** 2)
        val = self.amplitude * env * np.sin(2 * np.pi * self.center_thz * 1e-3 * (t - 3 * w))
        return np.where((t >= 0) & (t <= 6 * w), val, 0.0)


@dataclass(frozen=True)
class Monitor:
    x: float
    y: float
    component: str = "Ey"


@dataclass(frozen=True)
class SimConfig:
    source: Source
    steps: int
    courant: float = 0.5  # fraction of the 2D limit 1/sqrt(2)
    pml_cells: int = 12
    pml_order: float = 3.0
    pml_reflection: float = 1e-6
    pml_axes: tuple[str, ...] = ("x", "y")
    monitors: tuple[Monitor, ...] = ()
    snapshot_step: int | None = None
    snapshot_component: str = "Ey"
    dft_frequencies_thz: tuple[float, ...] = ()
    dft_start_step: int | None = None  # defaults to the first step after source turn-off
    record_energy: bool = False

    def validate(self, grid: Grid2D | None = None) -> None:
        if not 0 < self.courant < 1:
            raise ConfigError(f"courant must be in (0, 1), got {self.courant}")
        if self.pml_cells < 4:
            raise ConfigError(f"pml_cells must be >= 4, got {self.pml_cells}")
        if not 0 < self.pml_reflection < 1:
            raise ConfigError("pml_reflection must be in (0, 1)")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if set(self.pml_axes) - {"x", "y"}:
            raise ConfigError(f"pml_axes must be drawn from 'x', 'y': {self.pml_axes}")
        comps = {m.component for m in self.monitors} | {self.snapshot_component}
        if comps - {"Ex", "Ey", "Hz"}:
            raise ConfigError(f"unknown field component in {sorted(comps)}")
        if grid is not None:
            for ax, n in (("x", grid.nx), ("y", grid.ny)):
                if ax in self.pml_axes and 2 * self.pml_cells >= n:
                    raise ConfigError(f"PML ({self.pml_cells} cells per side) does not fit along {ax}")




@dataclass
class FieldSnapshot:
    component: str
    values: np.ndarray  # (nx, ny), cell-centred
    step: int

    def __post_init__(self) -> None:
        if self.component not in COMPONENTS:
            raise ValueError(f"unknown component {self.component!r}")

    @property
    def component_id(self) -> int:
        return COMPONENTS[self.component]

    def to_bytes(self) -> bytes:
        """``FSNP`` container: magic, u32 nx, u32 ny, u32 component id (all
        little-endian), then nx*ny float64 values, row by row in y (each row
        holds the nx values at one y)."""
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise ValueError("complex snapshots must be reduced (e.g. to |E|^2) before writing")
        nx, ny = v.shape
        head = b"FSNP" + struct.pack("<III", nx, ny, self.component_id)
        return head + np.ascontiguousarray(v.T, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, step: int = 0) -> "FieldSnapshot":
        if len(data) < 16 or data[:4] != b"FSNP":
            raise ValueError("not an FSNP snapshot")
        nx, ny, comp = struct.unpack("<III", data[4:16])
        body = np.frombuffer(data[16:], dtype="<f8")
        if body.size != nx * ny:
            raise ValueError(f"FSNP body holds {body.size} values, header says {nx}x{ny}")
        return cls(COMPONENT_NAMES[comp], body.reshape(ny, nx).T.astype(float), step)


def eps_snapshot(grid: Grid2D) -> FieldSnapshot:
    return FieldSnapshot("eps", grid.eps.copy(), 0)


@dataclass
class FdtdResult:
    traces: list[TimeTrace]
    snapshot: FieldSnapshot | None
    dft: dict[float, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    energy: np.ndarray | None = None
    dt_fs: float = 0.0
    turn_off_step: int = 0

    def dft_intensity(self, f_thz: float | None = None) -> FieldSnapshot:
        """|E|^2 at cell centres from the running DFT at ``f_thz``."""
        if not self.dft:
            raise ValueError("no DFT frequencies were recorded")
        key = f_thz if f_thz is not None else next(iter(self.dft))
        ex, ey = self.dft[key]
        exc = 0.5 * (ex[:, :-1] + ex[:, 1:])
        eyc = 0.5 * (ey[:-1, :] + ey[1:, :])
        return FieldSnapshot("E2", np.abs(exc) ** 2 + np.abs(eyc) ** 2, -1)


def _pml_sigma(n: int, cells: int, order: float, refl: float, half: bool) -> np.ndarray:
    """Polynomially graded PML conductivity (in units of c / dx) along one axis.

    ``half`` selects positions at cell centres (i + 1/2) rather than at
    integer nodes.  Depth is measured from the interior PML boundary; the
    outer wall sits at depth ``cells``.
    """
    pos = np.arange(n if half else n + 1) + (0.5 if half else 0.0)
    depth = np.maximum(np.maximum(cells - pos, pos - (n - cells)), 0.0) / cells
    sigma_max = -(order + 1) * np.log(refl) / (2.0 * cells)
    return sigma_max * depth**order


def run_fdtd(grid: Grid2D, cfg: SimConfig) -> FdtdResult:
    """Leapfrog the TE fields for ``cfg.steps`` steps and collect the outputs."""
    cfg.validate(grid)
    nx, ny, dx = grid.nx, grid.ny, grid.dx
    S = cfg.courant / np.sqrt(2.0)
    dt_fs = S * dx / C_NM_PER_FS

    eps = grid.eps
    # edge permittivities: mean of the two adjacent cells (the outer PEC edges are never updated)
    eps_x = np.empty((nx, ny + 1))
    eps_x[:, 1:-1] = 0.5 * (eps[:, :-1] + eps[:, 1:])
    eps_x[:, 0], eps_x[:, -1] = eps[:, 0], eps[:, -1]
    eps_y = np.empty((nx + 1, ny))
    eps_y[1:-1, :] = 0.5 * (eps[:-1, :] + eps[1:, :])
    eps_y[0, :], eps_y[-1, :] = eps[0, :], eps[-1, :]
    cex = S / eps_x[:, 1:-1]
    cey = S / eps_y[1:-1, :]

    hz = np.zeros((nx, ny))
    ex = np.zeros((nx, ny + 1))
    ey = np.zeros((nx + 1, ny))

    L = cfg.pml_cells
    px, py = "x" in cfg.pml_axes, "y" in cfg.pml_axes

    def coeffs(n, half, active):
        if not active:
            return None
        sigma = _pml_sigma(n, L, cfg.pml_order, cfg.pml_reflection, half)
        b = np.exp(-sigma * S)
        c = np.where(sigma > 0, b - 1.0, 0.0)
        return b, c

    # Hz needs d/dx at cell centres (x-half) and d/dy at cell centres (y-half);
    # Ey needs d/dx of Hz at interior x nodes, Ex needs d/dy at interior y nodes.
    hx_pml = coeffs(nx, True, px)
    hy_pml = coeffs(ny, True, py)
    ex_pml = coeffs(ny, False, py)
    ey_pml = coeffs(nx, False, px)
    if ex_pml is not None:
        ex_pml = (ex_pml[0][1:-1], ex_pml[1][1:-1])
    if ey_pml is not None:
        ey_pml = (ey_pml[0][1:-1], ey_pml[1][1:-1])

    # auxiliary fields only inside the absorbing strips
    def strips(n):
        return [slice(0, L), slice(n - L, n)]

    psi_hx = np.zeros((nx, ny))
    psi_hy = np.zeros((nx, ny))
    psi_ex = np.zeros((nx, ny - 1))
    psi_ey = np.zeros((nx - 1, ny))

    src = cfg.source
    if src.polarization == "Hz":
        si, sj = grid.index_of(src.x, src.y)
        s_index = (si, slice(None)) if src.line else (si, sj)
        s_coef = S
    elif src.polarization == "Ey":
        si = int(np.clip(round((src.x - grid.x0) / dx), 1, nx - 1))
        sj = grid.index_of(src.x, src.y)[1]
        s_index = (si, slice(None)) if src.line else (si, sj)
        s_coef = S / eps_y[s_index]
    else:
        si = grid.index_of(src.x, src.y)[0]
        sj = int(np.clip(round((src.y - grid.y0) / dx), 1, ny - 1))
        s_index = (si, slice(1, ny)) if src.line else (si, sj)
        s_coef = S / eps_x[s_index]
    t_half = (np.arange(cfg.steps) + 0.5) * dt_fs
    s_wave = src.waveform(t_half)
    turn_off_step = int(np.ceil(src.turn_off_fs / dt_fs))

    mon_idx = []
    for m in cfg.monitors:
        i, j = grid.index_of(m.x, m.y)
        if m.component == "Ey":
            i = int(np.clip(round((m.x - grid.x0) / dx), 0, nx))
        elif m.component == "Ex":
            j = int(np.clip(round((m.y - grid.y0) / dx), 0, ny))
        mon_idx.append((m.component, i, j))
    records = np.zeros((len(mon_idx), cfg.steps))
    fields = {"Hz": hz, "Ex": ex, "Ey": ey}

    dft_start = cfg.dft_start_step if cfg.dft_start_step is not None else turn_off_step
    dft_acc = {f: (np.zeros((nx, ny + 1), complex), np.zeros((nx + 1, ny), complex)) for f in cfg.dft_frequencies_thz}
    energy = np.zeros(cfg.steps) if cfg.record_energy else None
    snapshot = None
    limit = DIVERGENCE_FACTOR * max(abs(src.amplitude), 1e-300)

    for n in range(cfg.steps):
        if energy is not None:
            hz_prev = hz.copy()

        # --- H update
        dey = ey[1:, :] - ey[:-1, :]
        dex = ex[:, 1:] - ex[:, :-1]
        if hx_pml is not None:
            b, c = hx_pml
            for sl in strips(nx):
                psi_hx[sl] = b[sl, None] * psi_hx[sl] + c[sl, None] * dey[sl]
            dey += psi_hx
        if hy_pml is not None:
            b, c = hy_pml
            for sl in strips(ny):
                psi_hy[:, sl] = b[None, sl] * psi_hy[:, sl] + c[None, sl] * dex[:, sl]
            dex += psi_hy
        hz -= S * (dey - dex)
        if src.polarization == "Hz":
            hz[s_index] += s_coef * s_wave[n]

        if energy is not None:
            energy[n] = 0.5 * (
                np.sum(eps_x * ex * ex) + np.sum(eps_y * ey * ey) + np.sum(hz_prev * hz)
            )

        # --- E update
        dhy = hz[:, 1:] - hz[:, :-1]
        dhx = hz[1:, :] - hz[:-1, :]
        if ex_pml is not None:
            b, c = ex_pml
            for sl in strips(ny - 1):
                psi_ex[:, sl] = b[None, sl] * psi_ex[:, sl] + c[None, sl] * dhy[:, sl]
            dhy += psi_ex
        if ey_pml is not None:
            b, c = ey_pml
            for sl in strips(nx - 1):
                psi_ey[sl] = b[sl, None] * psi_ey[sl] + c[sl, None] * dhx[sl]
            dhx += psi_ey
        ex[:, 1:-1] += cex * dhy
        ey[1:-1, :] -= cey * dhx
        if src.polarization == "Ey":
            ey[s_index] -= s_coef * s_wave[n]
        elif src.polarization == "Ex":
            ex[s_index] += s_coef * s_wave[n]

        for k, (comp, i, j) in enumerate(mon_idx):
            records[k, n] = fields[comp][i, j]

        if dft_acc and n >= dft_start:
            t = (n + 1) * dt_fs
            for f, (ax, ay) in dft_acc.items():
                ph = np.exp(2j * np.pi * f * 1e-3 * t)
                ax += ph * ex
                ay += ph * ey

        if cfg.snapshot_step is not None and n == cfg.snapshot_step:
            snapshot = _snapshot(cfg.snapshot_component, hz, ex, ey, n)

        if n % _DIVERGENCE_CHECK_EVERY == 0 or n == cfg.steps - 1:
            peak = max(np.abs(hz).max(), np.abs(ex).max(), np.abs(ey).max())
            if not np.isfinite(peak) or peak > limit:
                raise DivergenceError(n, float(peak))

    traces = [
        TimeTrace(records[k], dt_fs, dt_fs, "fs", label=f"{c}@({m.x},{m.y})")
        for k, ((c, _, _), m) in enumerate(zip(mon_idx, cfg.monitors))
    ]
    return FdtdResult(traces, snapshot, dft_acc, energy, dt_fs, turn_off_step)


def _snapshot(component: str, hz, ex, ey, step: int) -> FieldSnapshot:
    if component == "Hz":
        v = hz.copy()
    elif component == "Ex":
        v = 0.5 * (ex[:, :-1] + ex[:, 1:])
    else:
        v = 0.5 * (ey[:-1, :] + ey[1:, :])
    return FieldSnapshot(component, v, step)


def compute_mode_volume(
    intensity: FieldSnapshot | np.ndarray,
    grid: Grid2D,
    h_eff: float,
    wavelength_nm: float,
    n_ref: float = 2.41,
):
    """Effective mode volume ``h_eff * sum(eps |E|^2) dA / max(eps |E|^2)``.

    ``intensity`` is |E|^2 on the cell centres (an ``E2`` snapshot), or a
    single field component, which is squared.  Returns a
    :class:`~phc_lab.units.ModeVolume` in units of (lambda / n_ref)^3.
    """
    from .units import ModeVolume

    if isinstance(intensity, FieldSnapshot):
        vals = intensity.values
        e2 = vals if intensity.component == "E2" else np.abs(vals) ** 2
    else:
        e2 = np.abs(np.asarray(intensity)) ** 2
    if e2.shape != grid.eps.shape:
        raise ValueError("snapshot raster does not match the grid")
    u = grid.eps * e2
    peak = u.max()
    if not peak > 0:
        raise ValueError("degenerate field: |E|^2 is zero everywhere")
    vol = h_eff * u.sum() * grid.dx**2 / peak
    return ModeVolume.from_absolute(vol, wavelength_nm, n_ref)


def mode_volume_nm3(e2: np.ndarray, eps: np.ndarray, dx: float, h_eff: float) -> float:
    u = eps * e2
    peak = u.max()
    if not peak > 0:
        raise ValueError("degenerate field: |E|^2 is zero everywhere")
    return float(h_eff * u.sum() * dx * dx / peak)
