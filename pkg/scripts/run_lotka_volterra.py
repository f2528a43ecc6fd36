#!/usr/bin/env python3
"""Lotka-Volterra benchmark: visa vs iwfvi on synthetic predator-prey data.

Observations and the MCMC reference sample set are generated on first
use and reused afterwards (both live in the output directory).
"""

import argparse
import json
import sys
from pathlib import Path

from visa.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/lotka-volterra")
    ap.add_argument("--steps", type=int, default=3000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--smoke", action="store_true", help="tiny run to check wiring")
    args = ap.parse_args()

    out = Path(args.out)
    config = {
        "model": {
            "kind": "lotka-volterra",
            "data": str((out / "lv_data.csv").resolve()),
            "gen": {
                "theta": [1.0, 0.05, 1.0, 0.05],
                "z0": [10.0, 10.0],
                "sigma": 0.25,
                "t_obs": 20,
                "seed": 0,
            },
        },
        "method": ["visa", "iwfvi"],
        "lr": [0.001, 0.005, 0.01],
        "ess_threshold": [0.9, 0.95, 0.99],
        "n_samples": 100,
        "steps": 10 if args.smoke else args.steps,
        "seeds": args.seeds[:1] if args.smoke else args.seeds,
        "out_dir": str(out.resolve()),
        "reference": (
            {"n_samples": 200, "burn_in": 500, "thin": 2}
            if args.smoke
            else {"n_samples": 10000, "burn_in": 10000, "thin": 10}
        ),
    }
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(config, indent=2) + "\n")
    return cli_main(["run", "--config", str(cfg_path), "--jobs", str(args.jobs)])


if __name__ == "__main__":
    sys.exit(main())
