#!/usr/bin/env python3
"""Pickover attractor benchmark: pseudo-marginal targets via particle filter.

The log joint is estimated with a bootstrap particle filter (M=500 by
default), so every model evaluation is genuinely expensive; the test
metric in the traces is the running mean of the training objective.
"""

import argparse
import json
import sys
from pathlib import Path

from visa.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/pickover")
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--smoke", action="store_true", help="tiny run to check wiring")
    args = ap.parse_args()

    out = Path(args.out)
    config = {
        "model": {
            "kind": "pickover",
            "data": str((out / "pickover_data.csv").resolve()),
            "gen": {"theta": [-2.3, 1.25], "t": 100, "seed": 0},
            "n_particles": 50 if args.smoke else 500,
        },
        "method": ["visa", "iwfvi"],
        "lr": 0.005,
        "ess_threshold": 0.99,
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
