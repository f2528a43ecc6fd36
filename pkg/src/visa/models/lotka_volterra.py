"""Lotka-Volterra predator-prey model with log-normal observation noise.

Latents (all positive, natural scale):

    z = (z0_prey, z0_pred, alpha, beta, gamma, delta)

with priors z0 ~ LogNormal(log 10, 1) per species, alpha, gamma ~
Normal(1, 0.5) and beta, delta ~ Normal(0.05, 0.05) (standard
deviations).  Observations y_t per species at integer times follow
LogNormal(log z_t, obs_scale) around the integrated trajectory.  One
log-joint call runs one fixed-step RK4 solve and counts as a single
model evaluation.

rk4_integrate is the plain reference integrator; the log-joint uses a
compiled kernel with the identical update arithmetic (pinned against
the reference by tests) so that a full benchmark run stays fast.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numba
import numpy as np

from ..errors import IntegrationError
from ..model import Model

_LOG_2PI = float(np.log(2.0 * np.pi))

# prior constants (natural scale)
PRIOR_Z0_LOG_MEAN = math.log(10.0)
PRIOR_Z0_LOG_SD = 1.0
PRIOR_RATE_MEAN = 1.0
PRIOR_RATE_SD = 0.5
PRIOR_CROSS_MEAN = 0.05
PRIOR_CROSS_SD = 0.05

DEFAULT_OBS_SCALE = 0.25
DEFAULT_STEP_SIZE = 0.01
_STATE_CAP = 1e12  # early-out bound for exploding trajectories


def lv_rhs(u: float, v: float, alpha: float, beta: float, gamma: float, delta: float):
    """Time derivatives (du/dt, dv/dt) of prey u and predator v."""
    return (alpha - beta * v) * u, (-gamma + delta * u) * v


def _steps_per_unit(h: float) -> int:
    spu = round(1.0 / h)
    if spu < 1 or abs(spu * h - 1.0) > 1e-9:
        raise ValueError("step size h must evenly divide 1")
    return spu


def rk4_integrate(rhs, z0: np.ndarray, h: float, t_end: float) -> np.ndarray:
    """Classical fixed-step RK4; returns states at integer times 0..t_end.

    rhs maps a state vector to its derivative.  t_end must be a positive
    integer multiple of h (and h must divide the unit interval) so the
    observation times land exactly on grid points.  A non-finite state
    raises IntegrationError.
    """
    spu = _steps_per_unit(h)
    n_units = round(t_end)
    if n_units < 1 or abs(n_units - t_end) > 1e-9:
        raise ValueError("t_end must be a positive integer (multiple of h)")
    z = np.atleast_1d(np.asarray(z0, dtype=float)).copy()
    out = np.empty((n_units + 1, z.shape[0]))
    out[0] = z
    for unit in range(n_units):
        for _ in range(spu):
            k1 = np.asarray(rhs(z), dtype=float)
            k2 = np.asarray(rhs(z + 0.5 * h * k1), dtype=float)
            k3 = np.asarray(rhs(z + 0.5 * h * k2), dtype=float)
            k4 = np.asarray(rhs(z + h * k3), dtype=float)
            z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(z)):
                raise IntegrationError("RK4 state became non-finite")
        out[unit + 1] = z
    return out


@numba.njit(cache=True)
def _lv_path(u0, v0, alpha, beta, gamma, delta, h, n_units, spu):  # pragma: no cover
    """Trajectory at integer times 1..n_units; ok=False on blow-up."""
    traj = np.empty((n_units, 2))
    u = u0
    v = v0
    for unit in range(n_units):
        for _ in range(spu):
            k1u = (alpha - beta * v) * u
            k1v = (-gamma + delta * u) * v
            u2 = u + 0.5 * h * k1u
            v2 = v + 0.5 * h * k1v
            k2u = (alpha - beta * v2) * u2
            k2v = (-gamma + delta * u2) * v2
            u3 = u + 0.5 * h * k2u
            v3 = v + 0.5 * h * k2v
            k3u = (alpha - beta * v3) * u3
            k3v = (-gamma + delta * u3) * v3
            u4 = u + h * k3u
            v4 = v + h * k3v
            k4u = (alpha - beta * v4) * u4
            k4v = (-gamma + delta * u4) * v4
            u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            if not (np.isfinite(u) and np.isfinite(v)):
                return False, traj
            if abs(u) > _STATE_CAP or abs(v) > _STATE_CAP:
                return False, traj
        traj[unit, 0] = u
        traj[unit, 1] = v
    return True, traj


def lv_trajectory(z: np.ndarray, h: float, t_end: int) -> Tuple[bool, np.ndarray]:
    """Fast-path trajectory at integer times 1..t_end for a full latent vector."""
    spu = _steps_per_unit(h)
    z = np.asarray(z, dtype=float)
    return _lv_path(z[0], z[1], z[2], z[3], z[4], z[5], float(h), int(t_end), spu)


def _norm_logpdf(x, mean, sd):
    return -0.5 * ((x - mean) / sd) ** 2 - math.log(sd) - 0.5 * _LOG_2PI


def _lognorm_logpdf(x, log_mean, sd):
    lx = math.log(x)
    return _norm_logpdf(lx, log_mean, sd) - lx


@dataclass(frozen=True, eq=False)
class LotkaVolterraModel:
    """Observed predator-prey series: times (integers >= 1) and (T, 2) values."""

    times: np.ndarray
    observations: np.ndarray
    obs_scale: float = DEFAULT_OBS_SCALE
    step_size: float = DEFAULT_STEP_SIZE

    def __post_init__(self):
        times = np.asarray(self.times)
        obs = np.asarray(self.observations, dtype=float)
        if not np.issubdtype(times.dtype, np.integer):
            as_int = np.asarray(np.round(times), dtype=int)
            if np.any(np.abs(times - as_int) > 1e-9):
                raise ValueError("observation times must be integers")
            times = as_int
        if times.ndim != 1 or np.any(times < 1) or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing integers >= 1")
        if obs.shape != (times.shape[0], 2) or not np.all(obs > 0):
            raise ValueError("observations must be positive with shape (len(times), 2)")
        if self.obs_scale <= 0:
            raise ValueError("obs_scale must be positive")
        _steps_per_unit(self.step_size)
        times = times.copy()
        obs = obs.copy()
        times.setflags(write=False)
        obs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "observations", obs)

    @property
    def t_end(self) -> int:
        return int(self.times[-1])

    def as_model(self, name: str = "lotka-volterra") -> Model:
        return Model(dim=6, log_joint_fn=lambda z: lv_log_joint(self, z), name=name)


def lv_log_joint(model: LotkaVolterraModel, z: np.ndarray) -> float:
    """Unnormalized posterior log density of the 6-dim latent vector.

    -inf outside the positive orthant and whenever the integrated
    trajectory blows up or touches zero at an observation time.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (6,):
        raise ValueError("latent vector must have shape (6,)")
    if not np.all(np.isfinite(z)) or np.any(z <= 0):
        return -np.inf
    u0, v0, alpha, beta, gamma, delta = z
    log_prior = (
        _lognorm_logpdf(u0, PRIOR_Z0_LOG_MEAN, PRIOR_Z0_LOG_SD)
        + _lognorm_logpdf(v0, PRIOR_Z0_LOG_MEAN, PRIOR_Z0_LOG_SD)
        + _norm_logpdf(alpha, PRIOR_RATE_MEAN, PRIOR_RATE_SD)
        + _norm_logpdf(gamma, PRIOR_RATE_MEAN, PRIOR_RATE_SD)
        + _norm_logpdf(beta, PRIOR_CROSS_MEAN, PRIOR_CROSS_SD)
        + _norm_logpdf(delta, PRIOR_CROSS_MEAN, PRIOR_CROSS_SD)
    )
    ok, traj = lv_trajectory(z, model.step_size, model.t_end)
    if not ok:
        return -np.inf
    path = traj[model.times - 1]
    if not np.all(path > 0):
        return -np.inf
    sd = model.obs_scale
    log_path = np.log(path)
    log_y = np.log(model.observations)
    log_lik = float(
        np.sum(-0.5 * ((log_y - log_path) / sd) ** 2 - math.log(sd) - 0.5 * _LOG_2PI - log_y)
    )
    return float(log_prior + log_lik)


def lv_simulate_data(
    theta: np.ndarray,
    z0: np.ndarray,
    sigma: float,
    t_obs: int,
    rng: np.random.Generator,
    h: float = DEFAULT_STEP_SIZE,
) -> Tuple[np.ndarray, np.ndarray]:
    """Synthetic observations at times 1..t_obs for rates theta=(a, b, g, d)."""
    z = np.concatenate([np.asarray(z0, dtype=float), np.asarray(theta, dtype=float)])
    ok, traj = lv_trajectory(z, h, int(t_obs))
    if not ok or not np.all(traj > 0):
        raise IntegrationError("simulation parameters produced a degenerate trajectory")
    noise = rng.standard_normal(traj.shape)
    ys = traj * np.exp(sigma * noise)
    return np.arange(1, int(t_obs) + 1), ys


def save_observations(path, times: np.ndarray, ys: np.ndarray) -> None:
    """Write a t,prey,pred CSV at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "prey", "pred"])
        for t, row in zip(times, ys):
            writer.writerow([int(t), repr(float(row[0])), repr(float(row[1]))])


def load_observations(path) -> Tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "prey", "pred"]:
            raise ValueError(f"unexpected header in {path}: {header}")
        rows = [(int(r[0]), float(r[1]), float(r[2])) for r in reader]
    times = np.array([r[0] for r in rows])
    ys = np.array([[r[1], r[2]] for r in rows])
    return times, ys
