"""Regenerate the bundled synthetic datasets in demos/data/.

The reflection dip mimics the waveguide-coupled nanobeam: loaded Q 8.4e4
at 737 nm with a dip contrast of 0.954, sampled over eight linewidths with
1% Gaussian noise.  The flat spectrum is the negative control for the fit
command (no line present, so the fit must report non-convergence).

    python3 demos/make_synthetic_data.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from phc_lab.specfit.data import Spectrum
from phc_lab.specfit.synthetic import dip_spectrum
from phc_lab.units import wavelength_to_frequency

OUT = Path(__file__).resolve().parent / "data"

DIP_Q = 8.4e4
DIP_CONTRAST = 0.954
DIP_SEED = 20240


def main() -> None:
    OUT.mkdir(exist_ok=True)
    nu0_ghz = float(wavelength_to_frequency(737.0)) * 1e3
    rng = np.random.default_rng(DIP_SEED)
    dip = dip_spectrum(nu0_ghz, DIP_Q, 1 - DIP_CONTRAST, noise=0.01, rng=rng)
    (OUT / "synthetic_dip.csv").write_text(dip.to_csv())

    rng = np.random.default_rng(DIP_SEED + 1)
    flat = Spectrum(dip.axis, np.clip(1 + rng.normal(0, 0.01, len(dip)), 0, None), "GHz")
    (OUT / "flat_spectrum.csv").write_text(flat.to_csv())
    print(f"wrote {OUT}/synthetic_dip.csv and flat_spectrum.csv")


if __name__ == "__main__":
    main()
