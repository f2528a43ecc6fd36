"""Pickover-attractor state-space model with a pseudo-marginal log-joint.

The deterministic map

    h(x; beta, eta) = ( sin(beta x2) - cos(2.5 x1) x3,
                        sin(1.5 x1) x3 - cos(eta x2),
                        sin(x1) )

drives latent states z_t = h(z_{t-1}) + N(0, sigma_z^2 I) from
z_0 ~ N(0, I3), observed as y_t = z_t + N(0, sigma_y^2 I) for t >= 0.
The parameters theta = (beta, eta) carry a uniform prior on the box
[-3, 3] x [0, 3].  The likelihood is intractable, so the log-joint is
log prior plus a bootstrap-particle-filter estimate: every call runs one
full filter (one model evaluation) on a fresh randomness stream.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from ..model import Model
from .particle_filter import RESAMPLING_SCHEMES, bootstrap_pf

_LOG_2PI = float(np.log(2.0 * np.pi))


def pickover_step(x: np.ndarray, beta: float, eta: float) -> np.ndarray:
    """Apply the attractor map to a state (3,) or particle batch (n, 3)."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return np.stack(
        [
            np.sin(beta * x2) - np.cos(2.5 * x1) * x3,
            np.sin(1.5 * x1) * x3 - np.cos(eta * x2),
            np.sin(x1),
        ],
        axis=-1,
    )


@dataclass(frozen=True, eq=False)
class PickoverModel:
    """Observed series (T+1, 3) including t=0, plus filter settings."""

    observations: np.ndarray
    n_particles: int = 500
    sigma_z: float = 0.01
    sigma_y: float = 0.2
    beta_bounds: Tuple[float, float] = (-3.0, 3.0)
    eta_bounds: Tuple[float, float] = (0.0, 3.0)
    resampling: str = "multinomial"

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float).copy()
        if obs.ndim != 2 or obs.shape[1] != 3 or obs.shape[0] < 1:
            raise ValueError("observations must have shape (T + 1, 3)")
        if self.n_particles < 2:
            raise ValueError("n_particles must be >= 2")
        if self.sigma_z <= 0 or self.sigma_y <= 0:
            raise ValueError("noise scales must be positive")
        if self.resampling not in RESAMPLING_SCHEMES:
            raise ValueError(f"unknown resampling scheme {self.resampling!r}")
        lo_b, hi_b = self.beta_bounds
        lo_e, hi_e = self.eta_bounds
        if not (lo_b < hi_b and lo_e < hi_e):
            raise ValueError("parameter bounds must be non-empty intervals")
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)

    @property
    def log_prior(self) -> float:
        area = (self.beta_bounds[1] - self.beta_bounds[0]) * (
            self.eta_bounds[1] - self.eta_bounds[0]
        )
        return -math.log(area)

    def in_prior_box(self, theta: np.ndarray) -> bool:
        return bool(
            self.beta_bounds[0] <= theta[0] <= self.beta_bounds[1]
            and self.eta_bounds[0] <= theta[1] <= self.eta_bounds[1]
        )

    def as_model(self, seed: int, key: int = 1, name: str = "pickover") -> Model:
        """Counted model; call i uses the independent stream (seed, key, i).

        key separates the filter streams from other consumers of the same
        seed (the optimizer's sampler uses spawn_key=(0,), so keep key >= 1).
        """
        lock = threading.Lock()
        counter = [0]

        def fn(theta):
            with lock:
                idx = counter[0]
                counter[0] += 1
            ss = np.random.SeedSequence(entropy=seed, spawn_key=(key, idx))
            rng = np.random.Generator(np.random.Philox(ss))
            return pickover_log_joint(self, theta, rng)

        return Model(dim=2, log_joint_fn=fn, name=name)


class _PickoverSsm:
    def __init__(self, model: PickoverModel, beta: float, eta: float):
        self.model = model
        self.beta = beta
        self.eta = eta

    def sample_init(self, n, rng):
        return rng.standard_normal((n, 3))

    def propagate(self, x, rng):
        return pickover_step(x, self.beta, self.eta) + self.model.sigma_z * rng.standard_normal(
            x.shape
        )

    def obs_logpdf(self, y, x):
        sq = np.sum((y - x) ** 2, axis=-1)
        var = self.model.sigma_y**2
        return -0.5 * (sq / var + 3.0 * (math.log(var) + _LOG_2PI))


def pickover_log_joint(
    model: PickoverModel, theta: np.ndarray, rng: np.random.Generator
) -> float:
    """log prior + particle-filter log-likelihood estimate at theta.

    -inf outside the prior box (no filter run); otherwise one bootstrap
    filter pass over all observations using the supplied stream.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (2,):
        raise ValueError("theta must have shape (2,)")
    if not np.all(np.isfinite(theta)) or not model.in_prior_box(theta):
        return -np.inf
    ssm = _PickoverSsm(model, float(theta[0]), float(theta[1]))
    log_z = bootstrap_pf(
        ssm, model.observations, model.n_particles, rng, resampling=model.resampling
    )
    return float(model.log_prior + log_z)


def simulate_pickover_data(
    theta: np.ndarray,
    n_steps: int,
    rng: np.random.Generator,
    sigma_z: float = 0.01,
    sigma_y: float = 0.2,
) -> np.ndarray:
    """Observations y_0..y_{n_steps} from the generative process at theta."""
    beta, eta = float(theta[0]), float(theta[1])
    z = rng.standard_normal(3)
    ys = np.empty((n_steps + 1, 3))
    ys[0] = z + sigma_y * rng.standard_normal(3)
    for t in range(1, n_steps + 1):
        z = pickover_step(z, beta, eta) + sigma_z * rng.standard_normal(3)
        ys[t] = z + sigma_y * rng.standard_normal(3)
    return ys


def save_observations(path, ys: np.ndarray) -> None:
    """Write a t,y0,y1,y2 CSV at full precision, starting at t=0."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "y0", "y1", "y2"])
        for t, row in enumerate(np.asarray(ys, dtype=float)):
            writer.writerow([t, repr(float(row[0])), repr(float(row[1])), repr(float(row[2]))])


def load_observations(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "y0", "y1", "y2"]:
            raise ValueError(f"unexpected header in {path}: {header}")
        rows = [[float(r[1]), float(r[2]), float(r[3])] for r in reader]
    return np.asarray(rows)
