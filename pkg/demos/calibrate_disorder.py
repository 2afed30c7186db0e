"""Fit the disorder-loss coefficient ``alpha`` from direct FDTD runs.

The yield model estimates ``1/Q = 1/Q_base + alpha * (sigma_eff / a)**2``.
This script perturbs the a = 269 nm nanobeam at three disorder levels,
simulates two layouts per level and fits ``alpha`` through the origin.
The packaged ``DEFAULT_ALPHA`` was produced by this script (about ten
minutes on one core); the per-layout points scatter by an order of
magnitude because Q depends on where the displaced holes fall.
"""

from __future__ import annotations

import time

from phc_lab.cavity import CavitySettings
from phc_lab.disorder import calibrate_alpha
from phc_lab.geometry import Nanobeam1DSpec, generate_1d_holes


def main() -> None:
    h = generate_1d_holes(Nanobeam1DSpec(a=269.0))
    settings = CavitySettings(steps=15000, dx_nm=16.25, compute_volume=False)
    t0 = time.time()
    alpha, pts = calibrate_alpha(h, (2.0, 4.0, 6.0), 2, settings)
    print("sigma_eff/a    1/Q - 1/Q_base")
    for x, y in pts:
        print(f"{x:.5f}       {y:.3e}")
    print(f"alpha = {alpha:.4f}  ({time.time() - t0:.0f} s)")


if __name__ == "__main__":
    main()
