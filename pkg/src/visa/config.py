"""Experiment config files: strict parsing, defaults, effective echo.

Configs are JSON objects validated against a closed schema: unknown
keys are rejected and violations are reported with their field path.
parse_config returns the config with every default materialized; the
same dict is what run_experiment echoes to effective_config.json, and
re-parsing that echo reproduces the config exactly.

Relative paths inside a config (model data, reference samples, out_dir)
are resolved against the directory containing the config file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError

METHODS = ("visa", "iwfvi", "bbvi-sf", "bbvi-rp")
MODEL_KINDS = ("gaussian-diag", "gaussian-dense", "lotka-volterra", "pickover")
FAMILY_KINDS = ("diag", "full")
OPTIMIZERS = ("adam", "sgd")
RESAMPLING = ("multinomial", "systematic")

_DEFAULT_FAMILY_KIND = {
    "gaussian-diag": "diag",
    "gaussian-dense": "full",
    "lotka-volterra": "full",
    "pickover": "full",
}


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _require_dict(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        _fail(path, "must be an object")
    return obj


def _check_keys(obj: dict, allowed, path: str):
    for key in obj:
        if key not in allowed:
            _fail(path, f"unknown key {key!r}")


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, "must be a number")
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        _fail(path, "must be finite")
    return value


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, "must be an integer")
    return value


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        _fail(path, "must be a string")
    return value


def _float_list(value, path: str) -> List[float]:
    if isinstance(value, list):
        if not value:
            _fail(path, "must not be empty")
        return [_as_float(v, f"{path}[{i}]") for i, v in enumerate(value)]
    return [_as_float(value, path)]


def _str_list(value, path: str) -> List[str]:
    if isinstance(value, list):
        if not value:
            _fail(path, "must not be empty")
        return [_as_str(v, f"{path}[{i}]") for i, v in enumerate(value)]
    return [_as_str(value, path)]


def _resolve(path_str: str, base_dir: Path) -> str:
    p = Path(path_str)
    if not p.is_absolute():
        p = base_dir / p
    return str(p.resolve())


def _validate_model(raw, base_dir: Path) -> Dict[str, Any]:
    raw = _require_dict(raw, "model")
    kind = raw.get("kind")
    if kind not in MODEL_KINDS:
        _fail("model.kind", f"must be one of {list(MODEL_KINDS)}, got {kind!r}")
    out: Dict[str, Any] = {"kind": kind}
    if kind == "gaussian-diag":
        _check_keys(raw, {"kind", "dim", "sigma_min", "sigma_max"}, "model")
        out["dim"] = _as_int(raw.get("dim", 128), "model.dim")
        if out["dim"] < 2:
            _fail("model.dim", "must be >= 2")
        out["sigma_min"] = _as_float(raw.get("sigma_min", 0.1), "model.sigma_min")
        out["sigma_max"] = _as_float(raw.get("sigma_max", 1.0), "model.sigma_max")
        if not (0 < out["sigma_min"] <= out["sigma_max"]):
            _fail("model.sigma_min", "need 0 < sigma_min <= sigma_max")
    elif kind == "gaussian-dense":
        _check_keys(raw, {"kind", "dim", "cov_seed"}, "model")
        out["dim"] = _as_int(raw.get("dim", 32), "model.dim")
        if out["dim"] < 2:
            _fail("model.dim", "must be >= 2")
        out["cov_seed"] = _as_int(raw.get("cov_seed", 0), "model.cov_seed")
    elif kind == "lotka-volterra":
        _check_keys(raw, {"kind", "data", "gen", "obs_scale", "step_size"}, "model")
        if "data" not in raw:
            _fail("model.data", "is required for lotka-volterra")
        out["data"] = _resolve(_as_str(raw["data"], "model.data"), base_dir)
        out["obs_scale"] = _as_float(raw.get("obs_scale", 0.25), "model.obs_scale")
        if out["obs_scale"] <= 0:
            _fail("model.obs_scale", "must be positive")
        out["step_size"] = _as_float(raw.get("step_size", 0.01), "model.step_size")
        if out["step_size"] <= 0:
            _fail("model.step_size", "must be positive")
        if "gen" in raw:
            gen = _require_dict(raw["gen"], "model.gen")
            _check_keys(gen, {"theta", "z0", "sigma", "t_obs", "seed"}, "model.gen")
            theta = _float_list(gen.get("theta", [1.0, 0.05, 1.0, 0.05]), "model.gen.theta")
            if len(theta) != 4:
                _fail("model.gen.theta", "must have 4 entries (alpha, beta, gamma, delta)")
            z0 = _float_list(gen.get("z0", [10.0, 10.0]), "model.gen.z0")
            if len(z0) != 2:
                _fail("model.gen.z0", "must have 2 entries")
            sigma = _as_float(gen.get("sigma", 0.25), "model.gen.sigma")
            if sigma <= 0:
                _fail("model.gen.sigma", "must be positive")
            t_obs = _as_int(gen.get("t_obs", 20), "model.gen.t_obs")
            if t_obs < 1:
                _fail("model.gen.t_obs", "must be >= 1")
            out["gen"] = {
                "theta": theta,
                "z0": z0,
                "sigma": sigma,
                "t_obs": t_obs,
                "seed": _as_int(gen.get("seed", 0), "model.gen.seed"),
            }
    elif kind == "pickover":
        _check_keys(
            raw,
            {"kind", "data", "gen", "n_particles", "sigma_z", "sigma_y", "resampling"},
            "model",
        )
        if "data" not in raw:
            _fail("model.data", "is required for pickover")
        out["data"] = _resolve(_as_str(raw["data"], "model.data"), base_dir)
        out["n_particles"] = _as_int(raw.get("n_particles", 500), "model.n_particles")
        if out["n_particles"] < 2:
            _fail("model.n_particles", "must be >= 2")
        out["sigma_z"] = _as_float(raw.get("sigma_z", 0.01), "model.sigma_z")
        out["sigma_y"] = _as_float(raw.get("sigma_y", 0.2), "model.sigma_y")
        if out["sigma_z"] <= 0 or out["sigma_y"] <= 0:
            _fail("model.sigma_z", "noise scales must be positive")
        out["resampling"] = raw.get("resampling", "multinomial")
        if out["resampling"] not in RESAMPLING:
            _fail("model.resampling", f"must be one of {list(RESAMPLING)}")
        if "gen" in raw:
            gen = _require_dict(raw["gen"], "model.gen")
            _check_keys(gen, {"theta", "t", "seed"}, "model.gen")
            theta = _float_list(gen.get("theta", [-2.3, 1.25]), "model.gen.theta")
            if len(theta) != 2:
                _fail("model.gen.theta", "must have 2 entries (beta, eta)")
            t_steps = _as_int(gen.get("t", 100), "model.gen.t")
            if t_steps < 1:
                _fail("model.gen.t", "must be >= 1")
            out["gen"] = {
                "theta": theta,
                "t": t_steps,
                "seed": _as_int(gen.get("seed", 0), "model.gen.seed"),
            }
    return out


_TOP_KEYS = {
    "model",
    "method",
    "family",
    "lr",
    "ess_threshold",
    "n_samples",
    "steps",
    "eval_budget",
    "seeds",
    "out_dir",
    "metric_every",
    "optimizer",
    "reference",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; effective holds the echo dict."""

    effective: Dict[str, Any]

    @property
    def model(self) -> Dict[str, Any]:
        return self.effective["model"]

    @property
    def methods(self) -> Tuple[str, ...]:
        return tuple(self.effective["method"])

    @property
    def lrs(self) -> Tuple[float, ...]:
        return tuple(self.effective["lr"])

    @property
    def ess_thresholds(self) -> Optional[Tuple[float, ...]]:
        if "ess_threshold" in self.effective:
            return tuple(self.effective["ess_threshold"])
        return None

    @property
    def family_kind(self) -> str:
        return self.effective["family"]["kind"]

    @property
    def n_samples(self) -> int:
        return self.effective["n_samples"]

    @property
    def steps(self) -> int:
        return self.effective["steps"]

    @property
    def eval_budget(self) -> Optional[int]:
        return self.effective["eval_budget"]

    @property
    def seeds(self) -> Tuple[int, ...]:
        return tuple(self.effective["seeds"])

    @property
    def out_dir(self) -> Path:
        return Path(self.effective["out_dir"])

    @property
    def metric_every(self) -> int:
        return self.effective["metric_every"]

    @property
    def optimizer_kind(self) -> str:
        return self.effective["optimizer"]

    @property
    def reference(self) -> Optional[Dict[str, Any]]:
        return self.effective.get("reference")

    def dump_json(self) -> str:
        return json.dumps(self.effective, indent=2, sort_keys=True) + "\n"


def parse_config_dict(raw: dict, base_dir=None) -> ExperimentConfig:
    """Validate a raw config dict; see parse_config."""
    base_dir = Path.cwd() if base_dir is None else Path(base_dir)
    raw = _require_dict(raw, "config")
    _check_keys(raw, _TOP_KEYS, "config")
    if "model" not in raw:
        _fail("model", "is required")
    if "method" not in raw:
        _fail("method", "is required")
    eff: Dict[str, Any] = {}
    eff["model"] = _validate_model(raw["model"], base_dir)
    kind = eff["model"]["kind"]

    methods = _str_list(raw["method"], "method")
    for i, m in enumerate(methods):
        if m not in METHODS:
            _fail(f"method[{i}]", f"must be one of {list(METHODS)}, got {m!r}")
    if len(set(methods)) != len(methods):
        _fail("method", "entries must be distinct")
    if "bbvi-rp" in methods and not kind.startswith("gaussian"):
        _fail("method", "bbvi-rp requires a gaussian model (analytic gradients)")
    eff["method"] = methods

    if "visa" in methods:
        if "ess_threshold" not in raw:
            _fail("ess_threshold", "is required when method includes 'visa'")
        alphas = _float_list(raw["ess_threshold"], "ess_threshold")
        for i, a in enumerate(alphas):
            if not (0.0 < a <= 1.0):
                _fail(f"ess_threshold[{i}]", f"must lie in (0, 1], got {a!r}")
        if len(set(alphas)) != len(alphas):
            _fail("ess_threshold", "entries must be distinct")
        eff["ess_threshold"] = alphas
    elif "ess_threshold" in raw:
        _fail("ess_threshold", "only applies when method includes 'visa'")

    family = _require_dict(raw.get("family", {}), "family")
    _check_keys(family, {"kind"}, "family")
    fam_kind = family.get("kind", _DEFAULT_FAMILY_KIND[kind])
    if fam_kind not in FAMILY_KINDS:
        _fail("family.kind", f"must be one of {list(FAMILY_KINDS)}")
    eff["family"] = {"kind": fam_kind}

    lrs = _float_list(raw.get("lr", 0.001), "lr")
    for i, lr in enumerate(lrs):
        if lr <= 0:
            _fail(f"lr[{i}]", "must be positive")
    if len(set(lrs)) != len(lrs):
        _fail("lr", "entries must be distinct")
    eff["lr"] = lrs

    eff["n_samples"] = _as_int(raw.get("n_samples", 10), "n_samples")
    if eff["n_samples"] < 2:
        _fail("n_samples", "must be >= 2")
    eff["steps"] = _as_int(raw.get("steps", 2000), "steps")
    if eff["steps"] < 1:
        _fail("steps", "must be >= 1")
    budget = raw.get("eval_budget", None)
    if budget is not None:
        budget = _as_int(budget, "eval_budget")
        if budget < 1:
            _fail("eval_budget", "must be >= 1 (or null)")
    eff["eval_budget"] = budget

    seeds_raw = raw.get("seeds", [1, 2, 3, 4, 5])
    if not isinstance(seeds_raw, list) or not seeds_raw:
        _fail("seeds", "must be a non-empty list of integers")
    seeds = [_as_int(s, f"seeds[{i}]") for i, s in enumerate(seeds_raw)]
    if any(s < 0 for s in seeds):
        _fail("seeds", "must be non-negative")
    if len(set(seeds)) != len(seeds):
        _fail("seeds", "entries must be distinct")
    eff["seeds"] = seeds

    eff["out_dir"] = _resolve(_as_str(raw.get("out_dir", "runs"), "out_dir"), base_dir)
    eff["metric_every"] = _as_int(raw.get("metric_every", 10), "metric_every")
    if eff["metric_every"] < 1:
        _fail("metric_every", "must be >= 1")
    optimizer = raw.get("optimizer", "adam")
    if optimizer not in OPTIMIZERS:
        _fail("optimizer", f"must be one of {list(OPTIMIZERS)}")
    eff["optimizer"] = optimizer

    if "reference" in raw:
        if kind != "lotka-volterra":
            _fail("reference", "only applies to the lotka-volterra model")
    if kind == "lotka-volterra":
        ref = _require_dict(raw.get("reference", {}), "reference")
        _check_keys(ref, {"path", "n_samples", "burn_in", "thin", "seed"}, "reference")
        path = ref.get("path")
        if path is None:
            path = str(Path(eff["out_dir"]) / "lv_reference.csv")
        else:
            path = _resolve(_as_str(path, "reference.path"), base_dir)
        n_ref = _as_int(ref.get("n_samples", 10000), "reference.n_samples")
        burn = _as_int(ref.get("burn_in", 10000), "reference.burn_in")
        thin = _as_int(ref.get("thin", 10), "reference.thin")
        if n_ref < 1 or burn < 0 or thin < 1:
            _fail("reference.n_samples", "need n_samples >= 1, burn_in >= 0, thin >= 1")
        eff["reference"] = {
            "path": path,
            "n_samples": n_ref,
            "burn_in": burn,
            "thin": thin,
            "seed": _as_int(ref.get("seed", 7), "reference.seed"),
        }
    return ExperimentConfig(effective=eff)


def parse_config(path) -> ExperimentConfig:
    """Load and validate a JSON config file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config: invalid JSON in {path}: {err}") from err
    return parse_config_dict(raw, base_dir=path.parent)
