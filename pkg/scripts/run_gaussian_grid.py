#!/usr/bin/env python3
"""Gaussian benchmark grid: visa/iwfvi/bbvi-sf/bbvi-rp across lr and alpha.

Writes the config used into the output directory and drives the CLI, so
the run can be replayed with `visa run --config <out>/config.json`.
"""

import argparse
import json
import sys
from pathlib import Path

from visa.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target", choices=("diag", "dense"), default="diag")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--smoke", action="store_true", help="tiny run to check wiring")
    args = ap.parse_args()

    out = Path(args.out or f"runs/gaussian-{args.target}")
    model = (
        {"kind": "gaussian-diag", "dim": 128, "sigma_min": 0.1, "sigma_max": 1.0}
        if args.target == "diag"
        else {"kind": "gaussian-dense", "dim": 32, "cov_seed": 0}
    )
    config = {
        "model": model,
        "method": ["visa", "iwfvi", "bbvi-sf", "bbvi-rp"],
        "lr": [0.001, 0.005, 0.01, 0.05],
        "ess_threshold": [0.9, 0.95, 0.99],
        "n_samples": 10,
        "steps": 10 if args.smoke else args.steps,
        "seeds": args.seeds[:1] if args.smoke else args.seeds,
        "out_dir": str(out.resolve()),
    }
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(config, indent=2) + "\n")
    return cli_main(["run", "--config", str(cfg_path), "--jobs", str(args.jobs)])


if __name__ == "__main__":
    sys.exit(main())
