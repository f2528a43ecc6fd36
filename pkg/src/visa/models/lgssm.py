"""Scalar linear-Gaussian state-space model with an exact Kalman likelihood.

States x_1 ~ N(init_mean, init_var), x_{t+1} = a x_t + N(0, q);
observations y_t = c x_t + N(0, r) for t = 1..horizon (q, r are
variances).  kalman_loglik gives the exact marginal likelihood via the
prediction-error decomposition, which pins down the particle filter's
unbiasedness in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class LgssmModel:
    a: float = 0.9
    q: float = 0.1
    c: float = 1.0
    r: float = 0.5
    init_mean: float = 0.0
    init_var: float = 1.0
    horizon: int = 5

    def __post_init__(self):
        if self.q <= 0 or self.r <= 0 or self.init_var <= 0:
            raise ValueError("q, r and init_var must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    def simulate(self, rng: np.random.Generator) -> np.ndarray:
        x = self.init_mean + math.sqrt(self.init_var) * rng.standard_normal()
        ys = np.empty(self.horizon)
        for t in range(self.horizon):
            if t > 0:
                x = self.a * x + math.sqrt(self.q) * rng.standard_normal()
            ys[t] = self.c * x + math.sqrt(self.r) * rng.standard_normal()
        return ys

    # --- bootstrap-particle-filter interface -------------------------------

    def sample_init(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.init_mean + math.sqrt(self.init_var) * rng.standard_normal(n)

    def propagate(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.a * x + math.sqrt(self.q) * rng.standard_normal(x.shape[0])

    def obs_logpdf(self, y: float, x: np.ndarray) -> np.ndarray:
        return -0.5 * ((y - self.c * x) ** 2 / self.r + math.log(self.r) + _LOG_2PI)


def kalman_loglik(model: LgssmModel, ys: np.ndarray) -> float:
    """Exact log marginal likelihood of the observation sequence."""
    ys = np.asarray(ys, dtype=float)
    if ys.shape != (model.horizon,):
        raise ValueError("observation length must equal the model horizon")
    mean, var = model.init_mean, model.init_var
    total = 0.0
    for t in range(model.horizon):
        if t > 0:
            mean = model.a * mean
            var = model.a * model.a * var + model.q
        s = model.c * model.c * var + model.r
        resid = ys[t] - model.c * mean
        total += -0.5 * (resid * resid / s + math.log(s) + _LOG_2PI)
        gain = var * model.c / s
        mean = mean + gain * resid
        var = (1.0 - gain * model.c) * var
    return float(total)
