"""Resonance of the nanobeam against lattice constant.

Runs the five bundled sweep configs (a = 226 to 284 nm) and prints the
resonance, Q and the shift per nanometre of lattice constant.  Expect the
resonance to move to longer wavelengths as ``a`` grows.

    python3 demos/lattice_sweep.py     # about a minute and a half on one core
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from phc_lab.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs" / "sweep"


def run() -> None:
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        for cfg in sorted(CONFIGS.glob("simulate_a*.json")):
            a = json.loads(cfg.read_text())["design"]["a_nm"]
            out = Path(tmp) / cfg.stem
            if main(["simulate", "--config", str(cfg), "--out", str(out)]) != 0:
                raise SystemExit(f"{cfg.name} failed")
            s = json.loads((out / "summary.json").read_text())
            rows.append((a, s["wavelength_nm"], s["q"]))
    print("\n  a (nm)   lambda (nm)   Q")
    for a, lam, q in rows:
        print(f"  {a:6.0f}   {lam:10.2f}   {q:.3g}")
    (a0, l0, _), (a1, l1, _) = rows[0], rows[-1]
    print(f"\nmean shift: {(l1 - l0) / (a1 - a0):.2f} nm of resonance per nm of lattice constant")


if __name__ == "__main__":
    run()
