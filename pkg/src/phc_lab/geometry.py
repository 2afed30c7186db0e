"""Hole layouts for the nanobeam and the triangular-lattice cavities.

Coordinates are in nm with the cavity centre at the origin and the cavity
(or line-defect) axis along x.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

import numpy as np

SCHEMA_VERSION = 1

DEFAULT_TAPER = (0.84, 0.844, 0.858, 0.88, 0.911, 0.951)
DEFAULT_SHIFT_RATIOS = (1.0, 0.75, 0.5, 0.25)


class DesignError(ValueError):
    """A design spec violates one of its geometric constraints."""


class OverlapError(DesignError):
    """Holes would overlap each other or cut through the beam."""


@dataclass(frozen=True)
class Nanobeam1DSpec:
    a: float = 269.0
    r: float = 65.0
    w: float = 370.0
    d: float = 160.0
    taper_coeffs: tuple[float, ...] = DEFAULT_TAPER
    n_mirror: int = 10
    waveguide_coupled: bool = False
    holes_removed: int = 9

    def __post_init__(self) -> None:
        object.__setattr__(self, "taper_coeffs", tuple(float(c) for c in self.taper_coeffs))

    def validate(self) -> None:
        c = self.taper_coeffs
        if self.a <= 0 or self.r < 0 or self.w <= 0 or self.d <= 0:
            raise DesignError("a, w, d must be > 0 and r >= 0")
        if not c or any(y <= x for x, y in zip(c, c[1:])):
            raise DesignError(f"taper_coeffs must be strictly increasing: {c}")
        if max(c) > 1:
            raise DesignError(f"taper_coeffs must all be <= 1: {c}")
        if not 2 * self.r < self.a * min(c):
            raise OverlapError(
                f"2r < a*min(taper_coeffs) violated: 2r = {2 * self.r} nm, tightest gap = {self.a * min(c)} nm"
            )
        if not 2 * self.r < self.w:
            raise OverlapError(f"2r < w violated: 2r = {2 * self.r} nm, w = {self.w} nm")
        if self.n_mirror < 0 or self.holes_removed < 0:
            raise DesignError("n_mirror and holes_removed must be >= 0")
        if self.waveguide_coupled and self.holes_removed > self.n_mirror + len(c):
            raise DesignError("holes_removed exceeds the holes available on one side")

    def gaps(self) -> list[float]:
        """Centre-to-centre gaps from the cavity centre outward."""
        return [self.a * c for c in self.taper_coeffs] + [self.a] * self.n_mirror


@dataclass(frozen=True)
class Phc2DSpec:
    a: float = 252.0
    r: float = 65.0
    d: float = 160.0
    b1: float = 10.1
    shift_ratios: tuple[float, ...] = DEFAULT_SHIFT_RATIOS
    n_rows: int = 7  # hole rows on each side of the line defect
    n_cols: int = 12  # lattice periods on each side of the cavity centre

    def __post_init__(self) -> None:
        object.__setattr__(self, "shift_ratios", tuple(float(c) for c in self.shift_ratios))

    def validate(self) -> None:
        s = self.shift_ratios
        if self.a <= 0 or self.r < 0 or self.d <= 0:
            raise DesignError("a, d must be > 0 and r >= 0")
        if not 2 * self.r < self.a:
            raise OverlapError(f"2r < a violated: 2r = {2 * self.r} nm, a = {self.a} nm")
        if not s or s[0] != 1.0 or any(y >= x for x, y in zip(s, s[1:])):
            raise DesignError(f"shift_ratios must start at 1.0 and strictly decrease: {s}")
        if self.b1 < 0:
            raise DesignError("b1 must be >= 0")
        if self.n_rows < 1 or self.n_cols < len(s):
            raise DesignError("lattice too small for the shifted holes")

    def shifts(self) -> list[float]:
        return [self.b1 * k for k in self.shift_ratios]


@dataclass(frozen=True)
class Outline:
    """Axis-aligned material region; ``open_x`` means the material runs on past
    the x bounds to the edge of any simulation domain (a waveguide)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    open_x: bool = False

    def contains(self, x, y):
        inside_y = (y >= self.ymin) & (y <= self.ymax)
        if self.open_x:
            return inside_y & np.ones_like(x, dtype=bool)
        return inside_y & (x >= self.xmin) & (x <= self.xmax)


@dataclass(frozen=True)
class HoleList:
    holes: np.ndarray  # (n, 3): x, y, r in nm
    outline: Outline
    spec: dict[str, Any] = field(default_factory=dict)
    provenance: str = ""
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        h = np.asarray(self.holes, dtype=float).reshape(-1, 3)
        h.setflags(write=False)
        object.__setattr__(self, "holes", h)

    def __len__(self) -> int:
        return len(self.holes)

    @property
    def x(self) -> np.ndarray:
        return self.holes[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.holes[:, 1]

    @property
    def r(self) -> np.ndarray:
        return self.holes[:, 2]

    def replace(self, holes=None, **kw) -> "HoleList":
        return HoleList(
            self.holes if holes is None else holes,
            kw.pop("outline", self.outline),
            kw.pop("spec", self.spec),
            kw.pop("provenance", self.provenance),
            kw.pop("metadata", self.metadata),
        )


def _sorted(holes: Iterable[tuple[float, float, float]]) -> np.ndarray:
    arr = np.array(list(holes), dtype=float).reshape(-1, 3)
    if len(arr) == 0:
        return arr
    return arr[np.lexsort((arr[:, 0], arr[:, 1]))]


def generate_1d_holes(spec: Nanobeam1DSpec) -> HoleList:
    """Nanobeam cavity with a lattice constant that tapers towards the centre.

    The gap spanning the centre is ``a1``; moving outward the next gaps are
    ``a2 .. a6`` and then ``n_mirror`` gaps of ``a``.  For a
    waveguide-coupled device the outermost ``holes_removed`` holes on +x are
    dropped and the beam is left open towards +x.
    """
    spec.validate()
    gaps = spec.gaps()
    xs = [gaps[0] / 2]
    for g in gaps[1:]:
        xs.append(xs[-1] + g)
    right = list(xs)
    left = [-x for x in xs]
    if spec.waveguide_coupled and spec.holes_removed:
        right = right[: len(right) - spec.holes_removed]
    holes = [(x, 0.0, spec.r) for x in left + right]
    half_len = xs[-1] + spec.a
    outline = Outline(-half_len, half_len, -spec.w / 2, spec.w / 2, open_x=True)
    return HoleList(
        _sorted(holes),
        outline,
        spec=_spec_dict(spec),
        provenance="nanobeam, quadratic lattice taper",
        metadata={"thickness_nm": spec.d, "a_nm": spec.a},
    )


def generate_2d_holes(spec: Phc2DSpec) -> HoleList:
    """Triangular lattice with one missing row along x, widened near the centre.

    In the two rows next to the missing row, the k-th hole from the centre on
    each side (k = 0..3) moves away from the defect axis by
    ``b1 * shift_ratios[k]``.
    """
    spec.validate()
    a = spec.a
    row_pitch = a * np.sqrt(3.0) / 2
    shifts = spec.shifts()
    holes = []
    for j in range(-spec.n_rows, spec.n_rows + 1):
        if j == 0:
            continue
        offset = 0.5 if j % 2 else 0.0
        y = j * row_pitch
        # lattice columns in units of a, symmetric about x = 0
        ms = np.arange(-spec.n_cols, spec.n_cols + 1) if not offset else np.arange(-spec.n_cols - 1, spec.n_cols + 1) + 0.5
        for m in ms:
            x = m * a
            dy = 0.0
            if abs(j) == 1:
                k = int(round(abs(m) - 0.5))
                if 0 <= k < len(shifts):
                    dy = shifts[k]
            yy = y + dy if j > 0 else y - dy
            holes.append((x, yy, spec.r))
    h = _sorted(holes)
    xmax = np.abs(h[:, 0]).max() + a / 2 if len(h) else a
    ymax = np.abs(h[:, 1]).max() + a / 2 if len(h) else a
    outline = Outline(-xmax, xmax, -ymax, ymax, open_x=False)
    return HoleList(
        h,
        outline,
        spec=_spec_dict(spec),
        provenance="triangular lattice, width-modulated line defect",
        metadata={"thickness_nm": spec.d, "a_nm": a},
    )


def _spec_dict(spec) -> dict[str, Any]:
    d = asdict(spec)
    d["kind"] = type(spec).__name__
    for k, v in d.items():
        if isinstance(v, tuple):
            d[k] = list(v)
    return d


def spec_from_dict(d: dict[str, Any]) -> Nanobeam1DSpec | Phc2DSpec:
    d = dict(d)
    kind = d.pop("kind", "Nanobeam1DSpec")
    cls = {"Nanobeam1DSpec": Nanobeam1DSpec, "Phc2DSpec": Phc2DSpec}[kind]
    return cls(**d)


@dataclass(frozen=True)
class Violation:
    kind: str  # "gap" or "clearance"
    holes: tuple[int, ...]
    value: float  # measured gap / clearance in nm
    limit: float

    def __str__(self) -> str:
        which = " & ".join(f"#{i}" for i in self.holes)
        return f"{self.kind} violation at hole {which}: {self.value:.3f} nm < {self.limit} nm"


def design_rule_check(h: HoleList, min_gap: float = 20.0, min_clearance: float = 20.0) -> list[Violation]:
    """Every hole pair closer than ``min_gap`` (edge to edge) and every hole
    closer than ``min_clearance`` to the outline edge."""
    out: list[Violation] = []
    xyz = h.holes
    n = len(xyz)
    if n > 1:
        dx = xyz[:, None, 0] - xyz[None, :, 0]
        dy = xyz[:, None, 1] - xyz[None, :, 1]
        edge = np.hypot(dx, dy) - (xyz[:, None, 2] + xyz[None, :, 2])
        i, j = np.nonzero(np.triu(edge < min_gap, k=1))
        out += [Violation("gap", (int(a), int(b)), float(edge[a, b]), min_gap) for a, b in zip(i, j)]
    o = h.outline
    for k, (x, y, r) in enumerate(xyz):
        dists = [y - o.ymin, o.ymax - y]
        if not o.open_x:
            dists += [x - o.xmin, o.xmax - x]
        c = min(dists) - r
        if c < min_clearance:
            out.append(Violation("clearance", (k,), float(c), min_clearance))
    return out


def _fmt(v: float) -> str:
    """Shortest round-trip decimal, written without a trailing '.0' for integers."""
    v = float(v)
    if v == 0:
        return "0"
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def layout_to_dict(h: HoleList) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "spec": h.spec,
        "provenance": h.provenance,
        "metadata": h.metadata,
        "outline": asdict(h.outline),
        "holes": [[float(x), float(y), float(r)] for x, y, r in h.holes],
    }


def export_layout(h: HoleList, format: str = "json") -> bytes:
    if format == "json":
        return (json.dumps(layout_to_dict(h), indent=1, sort_keys=True) + "\n").encode()
    if format == "csv":
        lines = ["x_nm,y_nm,r_nm"] + [",".join(_fmt(v) for v in row) for row in h.holes]
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown layout format {format!r}")


def import_layout(data: bytes | str) -> HoleList:
    d = json.loads(data)
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported layout schema_version {d.get('schema_version')!r}")
    return HoleList(
        np.array(d["holes"], dtype=float).reshape(-1, 3),
        Outline(**d["outline"]),
        spec=d.get("spec", {}),
        provenance=d.get("provenance", ""),
        metadata=d.get("metadata", {}),
    )


def read_layout_csv(data: bytes | str) -> np.ndarray:
    text = data.decode() if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["x_nm", "y_nm", "r_nm"]:
        raise ValueError("layout CSV must start with the header x_nm,y_nm,r_nm")
    return np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float).reshape(-1, 3)
