"""Command line interface: run experiment grids, plot traces, make data.

Exit codes: 0 on success, 2 when some grid cells failed (their errors
are in status.json and the rest of the grid still ran), 1 on config or
input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import parse_config, parse_config_dict
from .errors import ConfigError, VisaError
from .plotting import plot_traces
from .runner import materialize_data, run_experiment

_DATA_MODELS = {"lv": "lotka-volterra", "pickover": "pickover"}


def _load_config(path: str, out_override=None):
    if out_override is None:
        return parse_config(path)
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config: invalid JSON in {path}: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config: must be an object")
    raw["out_dir"] = str(Path(out_override).resolve())
    return parse_config_dict(raw, base_dir=path.parent)


def _cmd_run(args) -> int:
    config = _load_config(args.config, out_override=args.out)
    result = run_experiment(config, jobs=args.jobs)
    for s in result.statuses:
        if s["status"] == "ok":
            print(f"[ok] {s['csv']} rows={s['rows']} model_evals={s['model_evals']}")
        else:
            print(f"[FAILED] {s['csv']}: {s['error']}")
    n = len(result.statuses)
    print(f"{n - result.n_failed}/{n} cells succeeded; outputs in {config.out_dir}")
    return 2 if result.n_failed else 0


def _cmd_plot(args) -> int:
    out = plot_traces(args.csvs, args.out, log_x=args.log_x)
    print(f"wrote {out}")
    return 0


def _cmd_simulate_data(args) -> int:
    config = _load_config(args.config)
    kind = _DATA_MODELS[args.model]
    if config.model["kind"] != kind:
        raise ConfigError(
            f"model.kind: config declares {config.model['kind']!r}, expected {kind!r}"
        )
    path = Path(config.model["data"])
    if path.exists():
        print(f"{path} already exists; leaving it in place")
        return 0
    materialize_data(config.effective)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="visa", description="forward-KL variational inference benchmarks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a method x lr x alpha x seed grid")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_run.add_argument("--out", default=None, help="override the output directory")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_run.set_defaults(fn=_cmd_run)

    p_plot = sub.add_parser("plot", help="render trace CSVs into one SVG chart")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.add_argument("--log-x", action="store_true", help="log-scale eval axis")
    p_plot.add_argument("csvs", nargs="+", help="trace CSV files")
    p_plot.set_defaults(fn=_cmd_plot)

    p_sim = sub.add_parser(
        "simulate-data",
        help="write the configured synthetic data file (no-op when present)",
    )
    p_sim.add_argument("--model", required=True, choices=sorted(_DATA_MODELS))
    p_sim.add_argument("--config", required=True, help="JSON experiment config")
    p_sim.set_defaults(fn=_cmd_simulate_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (VisaError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
