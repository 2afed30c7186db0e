"""Plane-wave expansion bands of a triangular lattice of air holes (TE, out-of-plane H).

The master equation in the plane-wave basis reads

    sum_G' eta(G - G') (k + G) . (k + G') h(G') = (omega / c)^2 h(G)

where ``eta`` are the Fourier coefficients of 1/eps.  For circular holes of
radius r in a background eps_b the coefficients are analytic:

    eta(0) = 1/eps_b + f (1 - 1/eps_b)
    eta(G) = f (1 - 1/eps_b) 2 J1(|G| r) / (|G| r)

with f the hole filling fraction.  The plane-wave set is a disc |G| <= Gmax
(whole shells only), which keeps the basis invariant under the lattice's
six-fold rotations.
"""

from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, svdvals
from scipy.special import j1

from ._workers import worker_count

SQRT3 = np.sqrt(3.0)

# real-space primitive vectors in units of a
A1 = np.array([1.0, 0.0])
A2 = np.array([0.5, SQRT3 / 2])
# reciprocal vectors in units of 2 pi / a
B1 = np.array([1.0, -1.0 / SQRT3])
B2 = np.array([0.0, 2.0 / SQRT3])

# high-symmetry points in units of 2 pi / a
GAMMA = np.array([0.0, 0.0])
M_POINT = np.array([0.0, 1.0 / SQRT3])
K_POINT = np.array([1.0 / 3.0, 1.0 / SQRT3])


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class BandStructure:
    """Normalised frequencies a/lambda for each Bloch vector along a path.

    ``k_points`` are Cartesian, in units of 2 pi / a.
    """

    k_points: np.ndarray
    bands: np.ndarray  # (n_k, n_bands)
    n_planewaves: int
    a_nm: float
    r_nm: float
    n_eff: float
    warnings: list[str] = field(default_factory=list)

    def gaps(self, min_width: float = 1e-4) -> list[tuple[int, float, float]]:
        """Complete gaps as (lower band index, bottom, top) in a/lambda."""
        out = []
        for i in range(self.bands.shape[1] - 1):
            lo = self.bands[:, i].max()
            hi = self.bands[:, i + 1].min()
            if hi - lo > min_width:
                out.append((i, float(lo), float(hi)))
        return out

    def k_fractional(self) -> np.ndarray:
        """Bloch vectors as coefficients on the reciprocal basis (b1, b2)."""
        basis = np.column_stack([B1, B2])
        return np.linalg.solve(basis, self.k_points.T).T

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k_index", "k_frac_x", "k_frac_y"] + [f"band{i}" for i in range(self.bands.shape[1])])
        for i, (kf, row) in enumerate(zip(self.k_fractional(), self.bands)):
            w.writerow([i, repr(float(kf[0])), repr(float(kf[1]))] + [repr(float(v)) for v in row])
        return buf.getvalue()


def k_path(points_per_segment: int = 30) -> np.ndarray:
    """Gamma - M - K - Gamma, endpoints shared between segments."""
    corners = [GAMMA, M_POINT, K_POINT, GAMMA]
    path = []
    for p, q in zip(corners[:-1], corners[1:]):
        t = np.linspace(0.0, 1.0, points_per_segment, endpoint=False)
        path.append(p + t[:, None] * (q - p))
    path.append(GAMMA[None, :])
    return np.vstack(path)


def reciprocal_set(n_pw: int) -> np.ndarray:
    """Reciprocal lattice vectors (units of 2 pi / a) inside a disc holding about n_pw**2 of them."""
    target = n_pw * n_pw
    m = np.arange(-n_pw, n_pw + 1)
    mm, nn = np.meshgrid(m, m, indexing="ij")
    g = mm.ravel()[:, None] * B1 + nn.ravel()[:, None] * B2
    norm = np.hypot(g[:, 0], g[:, 1])
    order = np.argsort(norm, kind="stable")
    cutoff = norm[order[target - 1]]
    keep = norm <= cutoff * (1 + 1e-9)
    g = g[keep]
    # deterministic ordering: by shell, then angle
    ang = np.round(np.arctan2(g[:, 1], g[:, 0]), 12)
    rad = np.round(np.hypot(g[:, 0], g[:, 1]), 9)
    return g[np.lexsort((ang, rad))]


def inverse_eps_fourier(dg: np.ndarray, r_over_a: float, eps_b: float) -> np.ndarray:
    """Fourier coefficients of 1/eps for one air hole per triangular cell."""
    fill = 2 * np.pi * r_over_a**2 / SQRT3
    contrast = 1.0 - 1.0 / eps_b
    dg_norm = np.hypot(dg[..., 0], dg[..., 1])
    zero = dg_norm <= 1e-12
    gr = 2 * np.pi * dg_norm * r_over_a
    safe = np.where(gr > 0, gr, 1.0)
    form = np.where(gr > 0, 2 * j1(safe) / safe, 1.0)
    return np.where(zero, 1.0 / eps_b + fill * contrast, fill * contrast * form)


def _solve_k(k: np.ndarray, g: np.ndarray, chol_h: np.ndarray, n_bands: int) -> np.ndarray:
    """Lowest ``n_bands`` frequencies (a/lambda) at Bloch vector ``k``.

    With ``eta = L L^H`` the TE operator ``(k+G).(k+G') eta`` equals
    ``B^H B`` for ``B = [L^H Kx; L^H Ky]``, so the frequencies are the
    singular values of ``B``.  These carry an absolute error near machine
    epsilon even close to Gamma, where taking square roots of eigenvalues
    would amplify roundoff to ~1e-8.
    """
    kg = k[None, :] + g
    b = np.vstack([chol_h * kg[:, 0][None, :], chol_h * kg[:, 1][None, :]])
    sv = svdvals(b)
    return np.sort(sv)[:n_bands]


def pwe_bands(
    a_nm: float,
    r_nm: float,
    n_eff: float,
    n_pw: int = 11,
    k_points: np.ndarray | None = None,
    n_bands: int = 8,
    check_convergence: bool = True,
) -> BandStructure:
    """TE bands of a triangular air-hole lattice in a medium of index ``n_eff``."""
    if not 2 * r_nm < a_nm:
        raise ValueError(f"holes overlap: 2r = {2 * r_nm} nm >= a = {a_nm} nm")
    if r_nm < 0:
        raise ValueError("hole radius must be >= 0")
    if n_pw < 7 or n_pw % 2 == 0:
        raise ValueError(f"n_pw must be odd and >= 7, got {n_pw}")
    if k_points is None:
        k_points = k_path()
    k_points = np.atleast_2d(np.asarray(k_points, dtype=float))

    g = reciprocal_set(n_pw)
    eta = inverse_eps_fourier(g[:, None, :] - g[None, :, :], r_nm / a_nm, n_eff**2)
    residue = float(np.abs(eta - eta.T).max() / np.abs(eta).max())
    # eta is the truncated Toeplitz matrix of the positive function 1/eps, hence positive definite
    chol_h = cholesky(eta, lower=True).T

    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        bands = np.array(list(ex.map(lambda k: _solve_k(k, g, chol_h, n_bands), k_points)))
    out = BandStructure(k_points, bands, len(g), a_nm, r_nm, n_eff)
    if residue > 1e-9:
        out.warnings.append(f"non-Hermitian residue {residue:.2e}")

    if check_convergence:
        finer = pwe_bands(a_nm, r_nm, n_eff, n_pw + 2, k_points, n_bands, check_convergence=False)
        shifts = [
            max(abs(f[1] - c[1]) / c[1], abs(f[2] - c[2]) / c[2])
            for c, f in zip(out.gaps(), finer.gaps())
        ]
        if len(out.gaps()) != len(finer.gaps()) or any(s > 0.01 for s in shifts):
            msg = f"gap edges not converged at n_pw={n_pw} (shift vs n_pw+2: {shifts})"
            out.warnings.append(msg)
            warnings.warn(msg, ConvergenceWarning, stacklevel=2)
    return out


def empty_lattice_bands(k_points: np.ndarray, n_pw: int, n: float, n_bands: int) -> np.ndarray:
    """Folded light lines |k + G| / n in a/lambda, for the same plane-wave set."""
    g = reciprocal_set(n_pw)
    out = []
    for k in np.atleast_2d(k_points):
        kg = k[None, :] + g
        out.append(np.sort(np.hypot(kg[:, 0], kg[:, 1]))[:n_bands] / n)
    return np.array(out)


def rotate60(k: np.ndarray, times: int = 1) -> np.ndarray:
    t = np.pi / 3 * times
    rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    return np.asarray(k) @ rot.T
