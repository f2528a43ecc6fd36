"""Benchmark grid execution.

run_experiment takes a validated config, materializes data and reference
samples where needed, and runs one optimization per (method, lr, alpha,
seed) cell.  Each cell streams one CSV trace (flushed per row, so a
crashed run leaves a valid prefix) and reports into a status.json
sidecar; a failed cell never stops the rest of the grid.

Trace semantics: model_evals on row t is the evaluation count invested
in the parameters reported at step t (for VISA, the count just before
any post-step refresh), so the column equals N * (1 + refreshes on
earlier rows).  The test metric is refreshed every metric_every steps
(plus the first and last step) and carried in between; it never touches
the model counter.
"""

from __future__ import annotations

import csv
import json
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError
from .estimators import bbvi_rp_gradient, bbvi_sf_gradient, iwfvi_gradient
from .families import EXP, IDENTITY, TanhBoxTransform, VariationalParams
from .metrics import (
    ReferenceSampleSet,
    default_step_scale,
    oracle_upper_bound,
    rwmh_sample,
    symmetric_kl,
    tune_rwmh_scale,
)
from .model import Model
from .models import gaussian as gauss
from .models import lotka_volterra as lv
from .models import pickover as pk
from .optim import OptimizerConfig, init_state, step
from .rng import make_rng, substream
from .saa import OptTrace, VisaConfig, _is_snapshot_step, visa_run

TRACE_HEADER = "method,lr,alpha,seed,step,model_evals,train_loss,test_metric,refreshed"

# window (in steps) of the running-mean objective used as the pickover metric
RUNNING_MEAN_WINDOW = 100

BASELINE_METHODS = ("iwfvi", "bbvi-sf", "bbvi-rp")


class TraceRow(NamedTuple):
    method: str
    lr: float
    alpha: Optional[float]
    seed: int
    step: int
    model_evals: int
    train_loss: float
    test_metric: float
    refreshed: bool


def _fmt(x: float) -> str:
    return repr(float(x))


def format_trace_row(row: TraceRow) -> str:
    alpha = "" if row.alpha is None else _fmt(row.alpha)
    return ",".join(
        (
            row.method,
            _fmt(row.lr),
            alpha,
            str(row.seed),
            str(row.step),
            str(row.model_evals),
            _fmt(row.train_loss),
            _fmt(row.test_metric),
            "true" if row.refreshed else "false",
        )
    )


def parse_trace_csv(path) -> List[TraceRow]:
    """Read one trace CSV back into rows; the header must match exactly."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER.split(","):
            raise ValueError(f"unexpected trace header in {path}: {header}")
        for rec in reader:
            rows.append(
                TraceRow(
                    method=rec[0],
                    lr=float(rec[1]),
                    alpha=None if rec[2] == "" else float(rec[2]),
                    seed=int(rec[3]),
                    step=int(rec[4]),
                    model_evals=int(rec[5]),
                    train_loss=float(rec[6]),
                    test_metric=float(rec[7]),
                    refreshed={"true": True, "false": False}[rec[8]],
                )
            )
    return rows


class Cell(NamedTuple):
    """One grid point: alpha is None for every method except visa."""

    method: str
    lr: float
    alpha: Optional[float]
    seed: int


def cell_filename(cell: Cell) -> str:
    name = f"{cell.method}_lr{cell.lr:g}"
    if cell.alpha is not None:
        name += f"_alpha{cell.alpha:g}"
    return f"{name}_seed{cell.seed}.csv"


def expand_cells(config: ExperimentConfig) -> List[Cell]:
    cells = []
    for method in config.methods:
        for lr in config.lrs:
            alphas = config.ess_thresholds if method == "visa" else (None,)
            for alpha in alphas:
                for seed in config.seeds:
                    cells.append(Cell(method, lr, alpha, seed))
    return cells


class TraceWriter:
    """Streams trace rows for one cell, one flushed line per step.

    With a metric_fn the test metric is recomputed whenever params are
    passed (snapshot steps) and carried otherwise.  Without one the
    metric is the running mean of train_loss over the last
    RUNNING_MEAN_WINDOW steps.
    """

    def __init__(self, path, cell: Cell, metric_fn=None):
        self.cell = cell
        self.metric_fn = metric_fn
        self.rows = 0
        self._window = deque(maxlen=RUNNING_MEAN_WINDOW)
        self._metric = math.nan
        self._fh = open(path, "w", newline="")
        self._fh.write(TRACE_HEADER + "\n")
        self._fh.flush()

    def observe(self, t, evals, loss, refreshed, params, grad):
        if self.metric_fn is None:
            self._window.append(float(loss))
            self._metric = float(np.mean(self._window))
        elif params is not None:
            self._metric = float(self.metric_fn(params))
        c = self.cell
        row = TraceRow(
            method=c.method,
            lr=c.lr,
            alpha=c.alpha,
            seed=c.seed,
            step=t,
            model_evals=evals,
            train_loss=float(loss),
            test_metric=self._metric,
            refreshed=bool(refreshed),
        )
        self._fh.write(format_trace_row(row) + "\n")
        self._fh.flush()
        self.rows += 1

    def close(self):
        self._fh.close()


def run_baseline(
    model: Model,
    init_params: VariationalParams,
    method: str,
    n_samples: int,
    steps: int,
    rng: np.random.Generator,
    optimizer: OptimizerConfig = OptimizerConfig(),
    snapshot_every: int = 10,
    eval_budget: Optional[int] = None,
    observer=None,
) -> Tuple[VariationalParams, OptTrace]:
    """One optimizer run with a fresh gradient estimate every step.

    Counterpart of visa_run for the iwfvi / bbvi-sf / bbvi-rp baselines.
    Every step draws new samples, so each trace row carries
    refreshed=True and model_evals is the count right after the draw.
    """
    if method not in BASELINE_METHODS:
        raise ValueError(f"unknown baseline method {method!r}")
    trace = OptTrace(snapshot_every=snapshot_every)
    start = model.eval_count
    params = init_params
    vec = params.to_vector()
    opt_state = init_state(optimizer, vec.shape[0])
    trace.snapshots.append((0, params))
    for t in range(1, steps + 1):
        if method == "iwfvi":
            est = iwfvi_gradient(model, params, n_samples, rng)
        elif method == "bbvi-sf":
            est = bbvi_sf_gradient(model, params, n_samples, rng)
        else:
            est = bbvi_rp_gradient(model, params, rng)
        vec, opt_state = step(opt_state, vec, est.gradient)
        params = params.with_vector(vec)
        evals_now = model.eval_count - start
        snap = _is_snapshot_step(t, snapshot_every, steps)
        trace.steps.append(t)
        trace.model_evals.append(evals_now)
        trace.train_loss.append(est.loss)
        trace.refreshed.append(True)
        if snap:
            trace.snapshots.append((t, params))
        if observer is not None:
            observer(t, evals_now, est.loss, True, params if snap else None, est.gradient)
        if eval_budget is not None and evals_now >= eval_budget:
            break
    trace.total_model_evals = model.eval_count - start
    return params, trace


@dataclass
class CellSetup:
    """Everything one grid cell needs: a counted model, a starting
    family member, and a metric (None selects the running-mean loss)."""

    model: Model
    init_params: VariationalParams
    metric_fn: Optional[Callable[[VariationalParams], float]]


# starting point of the LV variational family in log space: prior
# centers for the means, prior log-spread for the scales
_LV_INIT_MEAN = (math.log(10.0), math.log(10.0), 0.0, math.log(0.05), 0.0, math.log(0.05))
_LV_INIT_LOG_DIAG = (0.0, 0.0) + (math.log(0.5),) * 4


def build_cell_setup(effective: dict, cell: Cell) -> CellSetup:
    spec = effective["model"]
    kind = spec["kind"]
    full = effective["family"]["kind"] == "full"

    def gaussian_setup(target: gauss.GaussianTarget) -> CellSetup:
        d = target.dim
        params = VariationalParams(
            mean=np.zeros(d),
            log_diag=np.zeros(d),
            lower=np.zeros((d, d)) if full else None,
            transform=IDENTITY,
        )
        return CellSetup(
            model=target.as_model(),
            init_params=params,
            metric_fn=lambda p: symmetric_kl(target, p),
        )

    if kind == "gaussian-diag":
        variances = gauss.make_diag_cov(spec["dim"], spec["sigma_min"], spec["sigma_max"])
        return gaussian_setup(gauss.GaussianTarget.from_diag(variances))
    if kind == "gaussian-dense":
        cov = gauss.make_dense_cov(spec["dim"], make_rng(spec["cov_seed"]))
        return gaussian_setup(gauss.GaussianTarget(cov=cov))
    if kind == "lotka-volterra":
        times, obs = lv.load_observations(spec["data"])
        model = lv.LotkaVolterraModel(
            times, obs, obs_scale=spec["obs_scale"], step_size=spec["step_size"]
        )
        ref = ReferenceSampleSet.load_csv(effective["reference"]["path"])
        params = VariationalParams(
            mean=np.array(_LV_INIT_MEAN),
            log_diag=np.array(_LV_INIT_LOG_DIAG),
            lower=np.zeros((6, 6)) if full else None,
            transform=EXP,
        )
        return CellSetup(
            model=model.as_model(),
            init_params=params,
            metric_fn=lambda p: oracle_upper_bound(ref, p),
        )
    if kind == "pickover":
        obs = pk.load_observations(spec["data"])
        model = pk.PickoverModel(
            observations=obs,
            n_particles=spec["n_particles"],
            sigma_z=spec["sigma_z"],
            sigma_y=spec["sigma_y"],
            resampling=spec["resampling"],
        )
        lo = np.array([model.beta_bounds[0], model.eta_bounds[0]])
        hi = np.array([model.beta_bounds[1], model.eta_bounds[1]])
        transform = TanhBoxTransform(center=(lo + hi) / 2, half_width=(hi - lo) / 2)
        params = VariationalParams(
            mean=np.zeros(2),
            log_diag=np.zeros(2),
            lower=np.zeros((2, 2)) if full else None,
            transform=transform,
        )
        return CellSetup(
            model=model.as_model(seed=cell.seed),
            init_params=params,
            metric_fn=None,
        )
    raise ConfigError(f"model.kind: unknown kind {kind!r}")


def materialize_data(effective: dict) -> None:
    """Create the model's observation CSV when absent but generable."""
    spec = effective["model"]
    kind = spec["kind"]
    if kind not in ("lotka-volterra", "pickover"):
        return
    path = Path(spec["data"])
    if path.exists():
        return
    gen = spec.get("gen")
    if gen is None:
        raise ConfigError(
            f"model.data: {path} does not exist and no gen parameters were given"
        )
    if kind == "lotka-volterra":
        times, ys = lv.lv_simulate_data(
            theta=np.array(gen["theta"]),
            z0=np.array(gen["z0"]),
            sigma=gen["sigma"],
            t_obs=gen["t_obs"],
            rng=make_rng(gen["seed"]),
            h=spec["step_size"],
        )
        lv.save_observations(path, times, ys)
    else:
        ys = pk.simulate_pickover_data(
            theta=np.array(gen["theta"]),
            n_steps=gen["t"],
            rng=make_rng(gen["seed"]),
            sigma_z=spec["sigma_z"],
            sigma_y=spec["sigma_y"],
        )
        pk.save_observations(path, ys)


# per-dimension random-walk scale taken from the prior spread:
# median * log-sd for the lognormal initial states, sd for the rates
_LV_PRIOR_SCALES = (10.0, 10.0, 0.5, 0.05, 0.5, 0.05)
_LV_PRIOR_CENTER = (10.0, 10.0, 1.0, 0.05, 1.0, 0.05)


def materialize_reference(effective: dict) -> None:
    """Create (or reuse) the persisted LV reference sample CSV."""
    if effective["model"]["kind"] != "lotka-volterra":
        return
    ref_cfg = effective["reference"]
    path = Path(ref_cfg["path"])
    if path.exists():
        return
    spec = effective["model"]
    times, obs = lv.load_observations(spec["data"])
    model = lv.LotkaVolterraModel(
        times, obs, obs_scale=spec["obs_scale"], step_size=spec["step_size"]
    ).as_model(name="lv-reference")
    init = np.array(_LV_PRIOR_CENTER)
    base = default_step_scale(np.array(_LV_PRIOR_SCALES))
    scale = tune_rwmh_scale(model, init, base, substream(ref_cfg["seed"], 0))
    ref = rwmh_sample(
        model,
        init,
        n_samples=ref_cfg["n_samples"],
        burn_in=ref_cfg["burn_in"],
        step_scale=scale,
        rng=substream(ref_cfg["seed"], 1),
        thin=ref_cfg["thin"],
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    ref.save_csv(path)


def _run_cell(effective: dict, cell: Cell) -> dict:
    """Worker for one grid cell; returns its status record."""
    out_dir = Path(effective["out_dir"])
    csv_name = cell_filename(cell)
    status = {
        "method": cell.method,
        "lr": cell.lr,
        "alpha": cell.alpha,
        "seed": cell.seed,
        "csv": csv_name,
        "status": "ok",
        "error": None,
        "rows": 0,
        "model_evals": 0,
        "refreshes": 0,
    }
    writer = None
    try:
        setup = build_cell_setup(effective, cell)
        writer = TraceWriter(out_dir / csv_name, cell, metric_fn=setup.metric_fn)
        rng = substream(cell.seed, 0)
        opt = OptimizerConfig(kind=effective["optimizer"], lr=cell.lr)
        common = dict(
            snapshot_every=effective["metric_every"],
            eval_budget=effective["eval_budget"],
            observer=writer.observe,
        )
        if cell.method == "visa":
            cfg = VisaConfig(
                n_samples=effective["n_samples"],
                ess_threshold=cell.alpha,
                step_budget=effective["steps"],
                optimizer=opt,
                snapshot_every=effective["metric_every"],
                eval_budget=effective["eval_budget"],
            )
            _, trace = visa_run(
                setup.model, setup.init_params, cfg, rng, observer=writer.observe
            )
        else:
            _, trace = run_baseline(
                setup.model,
                setup.init_params,
                cell.method,
                effective["n_samples"],
                effective["steps"],
                rng,
                optimizer=opt,
                **common,
            )
        status["model_evals"] = trace.total_model_evals
        status["refreshes"] = int(sum(trace.refreshed))
    except Exception as err:  # cell failures must not kill the grid
        status["status"] = "error"
        status["error"] = f"{type(err).__name__}: {err}"
        trace = getattr(err, "trace", None)
        if isinstance(trace, OptTrace):
            status["model_evals"] = trace.total_model_evals
            status["refreshes"] = int(sum(trace.refreshed))
    finally:
        if writer is not None:
            status["rows"] = writer.rows
            writer.close()
    return status


@dataclass(frozen=True)
class RunResult:
    csv_paths: Tuple[Path, ...]
    statuses: Tuple[dict, ...]
    status_path: Path

    @property
    def n_failed(self) -> int:
        return sum(1 for s in self.statuses if s["status"] != "ok")


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> RunResult:
    """Run the full grid; returns the per-cell CSV paths and statuses.

    Shared inputs (observation data, LV reference samples, the effective
    config echo) are materialized once up front; cells then run
    independently, in a process pool when jobs > 1.
    """
    effective = config.effective
    out_dir = Path(effective["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "effective_config.json").write_text(config.dump_json())
    materialize_data(effective)
    materialize_reference(effective)
    cells = expand_cells(config)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            statuses = list(pool.map(_run_cell, [effective] * len(cells), cells))
    else:
        statuses = [_run_cell(effective, cell) for cell in cells]
    status_path = out_dir / "status.json"
    summary = {
        "n_ok": sum(1 for s in statuses if s["status"] == "ok"),
        "n_failed": sum(1 for s in statuses if s["status"] != "ok"),
        "cells": statuses,
    }
    status_path.write_text(json.dumps(summary, indent=2) + "\n")
    paths = tuple(
        out_dir / s["csv"] for s in statuses if s["status"] == "ok"
    )
    return RunResult(csv_paths=paths, statuses=tuple(statuses), status_path=status_path)
