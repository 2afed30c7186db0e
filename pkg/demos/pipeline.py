"""End-to-end batch run through the command-line entry point.

Generates the a = 269 nm nanobeam, simulates a short-mirror version of it,
fits the bundled synthetic reflection dip, evaluates the cavity-QED figures
of merit and writes the literature ranking.  Every step writes into
``demos/out/<step>``; rerunning replaces the outputs (``--force``).

    python3 demos/pipeline.py          # about half a minute on one core
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from phc_lab.cli import main

HERE = Path(__file__).resolve().parent
CONFIGS = HERE.parent / "configs"
OUT = HERE / "out"


def step(command: str, config: Path | None) -> Path:
    out = OUT / command
    argv = [command, "--out", str(out), "--force"] + (["--config", str(config)] if config else [])
    code = main(argv)
    print(f"[{command}] exit {code}\n")
    return out


def main_demo() -> None:
    step("design", CONFIGS / "design_1d.json")
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "simulate.json"
        cfg.write_text(json.dumps({"schema_version": 1, "layout": str(OUT / "design" / "layout.json"), "steps": 12000}))
        summary = json.loads((step("simulate", cfg) / "summary.json").read_text())
    print(f"2D model: lambda {summary['wavelength_nm']:.1f} nm, Q {summary['q']:.3g}\n")
    step("fit", CONFIGS / "fit_dip.json")
    step("cqed", CONFIGS / "cqed.json")
    step("report", CONFIGS / "report.json")


if __name__ == "__main__":
    main_demo()
