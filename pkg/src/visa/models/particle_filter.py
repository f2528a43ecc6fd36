"""Bootstrap particle filter for state-space models.

The state-space object must provide

    sample_init(n, rng)   -> (n, ...) initial particles
    propagate(x, rng)     -> particles advanced one step
    obs_logpdf(y, x)      -> per-particle observation log density

The first observation is attached to the initial state; the filter
weights, accumulates log((1/M) sum w), and resamples at every
observation, which keeps the likelihood estimate exp(log Z) unbiased.
"""

from __future__ import annotations

import math

import numpy as np

RESAMPLING_SCHEMES = ("multinomial", "systematic")


def _normalized(log_w: np.ndarray) -> np.ndarray:
    w = np.exp(log_w - np.max(log_w))
    return w / w.sum()


def multinomial_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = weights.shape[0]
    return rng.choice(n, size=n, p=weights)


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = weights.shape[0]
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions)


def bootstrap_pf(
    ssm,
    observations: np.ndarray,
    n_particles: int,
    rng: np.random.Generator,
    resampling: str = "multinomial",
) -> float:
    """Log of the particle-filter likelihood estimate over all observations."""
    if n_particles < 2:
        raise ValueError("n_particles must be >= 2")
    if resampling not in RESAMPLING_SCHEMES:
        raise ValueError(f"unknown resampling scheme {resampling!r}")
    observations = np.asarray(observations)
    if observations.shape[0] < 1:
        raise ValueError("need at least one observation")
    resample = multinomial_resample if resampling == "multinomial" else systematic_resample
    x = ssm.sample_init(n_particles, rng)
    total = 0.0
    for t in range(observations.shape[0]):
        if t > 0:
            x = ssm.propagate(x, rng)
        log_w = np.asarray(ssm.obs_logpdf(observations[t], x), dtype=float)
        m = np.max(log_w)
        if m == -np.inf:
            return -math.inf
        shifted = np.exp(log_w - m)
        total += m + math.log(shifted.sum() / n_particles)
        idx = resample(shifted / shifted.sum(), rng)
        x = x[idx]
    return float(total)
