"""Evaluation metrics and reference posterior samples.

Closed-form Gaussian KLs serve the Gaussian benchmarks.  For targets
without closed-form divergences the test metric is a sample-average
upper bound on KL(p || q) + log Z,

    (1/N) sum_i (log p(y, z_i) - log q(z_i)),   z_i ~ reference set,

computed against a fixed reference sample set so the bound is a
deterministic functional of q (no model evaluations during a run).
Reference sets are drawn exactly when possible, otherwise with a
random-walk Metropolis-Hastings chain, and can be persisted to CSV so
every method run scores against the same draws.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NonMixingError
from .families import VariationalParams, log_densities
from .model import Model


def _as_moments(obj):
    if isinstance(obj, VariationalParams):
        if obj.transform.name != "identity":
            raise ValueError("moment extraction needs an identity-transform family")
        l = obj.scale_tril
        return obj.mean, l @ l.T
    mean = np.atleast_1d(np.asarray(obj.mean, dtype=float))
    cov = np.asarray(obj.cov, dtype=float)
    if cov.ndim == 1:
        cov = np.diag(cov)
    return mean, cov


def gaussian_kl(p, q) -> float:
    """KL(p || q) between Gaussians given as objects with mean/cov.

    Accepts GaussianTarget-like objects or identity-transform
    VariationalParams.
    """
    mean_p, cov_p = _as_moments(p)
    mean_q, cov_q = _as_moments(q)
    d = mean_p.shape[0]
    if mean_q.shape[0] != d:
        raise ValueError("dimension mismatch between p and q")
    try:
        chol_q = np.linalg.cholesky(cov_q)
        chol_p = np.linalg.cholesky(cov_p)
    except np.linalg.LinAlgError:
        # numerically degenerate covariance (collapsed scales); the
        # divergence is unbounded there and runs should keep going
        return math.inf
    # trace(Cq^-1 Cp) via the Cholesky factors
    half = solve_triangular(chol_q, chol_p, lower=True, check_finite=False)
    trace = float(np.sum(half * half))
    delta = mean_q - mean_p
    u = solve_triangular(chol_q, delta, lower=True, check_finite=False)
    quad = float(u @ u)
    log_det_q = 2.0 * float(np.log(np.diag(chol_q)).sum())
    log_det_p = 2.0 * float(np.log(np.diag(chol_p)).sum())
    return 0.5 * (trace + quad - d + log_det_q - log_det_p)


def symmetric_kl(p, q) -> float:
    """KL(p || q) + KL(q || p)."""
    return gaussian_kl(p, q) + gaussian_kl(q, p)


@dataclass(frozen=True, eq=False)
class ReferenceSampleSet:
    """Posterior draws with cached log-joints and provenance."""

    samples: np.ndarray  # (n, dim)
    log_joints: np.ndarray  # (n,)
    provenance: str = "exact"
    acceptance_rate: Optional[float] = None

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        lj = np.atleast_1d(np.asarray(self.log_joints, dtype=float))
        if lj.shape != (samples.shape[0],):
            raise ValueError("log_joints must align with samples")
        samples = samples.copy()
        lj = lj.copy()
        samples.setflags(write=False)
        lj.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "log_joints", lj)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def save_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"dim_{d}" for d in range(self.dim)] + ["log_joint"])
            for row, lj in zip(self.samples, self.log_joints):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(lj))])

    @classmethod
    def load_csv(cls, path, provenance: str = "file") -> "ReferenceSampleSet":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            dim = len(header) - 1
            if header != [f"dim_{d}" for d in range(dim)] + ["log_joint"]:
                raise ValueError(f"unexpected header in {path}: {header}")
            rows = [[float(v) for v in r] for r in reader]
        arr = np.asarray(rows)
        return cls(samples=arr[:, :dim], log_joints=arr[:, dim], provenance=provenance)


def oracle_upper_bound(ref: ReferenceSampleSet, params: VariationalParams) -> float:
    """Average of log p(y, z) - log q(z) over the reference set.

    Upper-bounds KL(p || q) + log Z and is exact in the limit of perfect
    reference samples; +inf when q misses part of the reference support.
    """
    log_q = log_densities(params, ref.samples)
    if np.any(log_q == -np.inf):
        return math.inf
    return float(np.mean(ref.log_joints - log_q))


def accept_log_prob(lp_current: float, lp_proposal: float) -> float:
    """Log acceptance probability of a symmetric-proposal MH move."""
    return min(0.0, lp_proposal - lp_current)


def default_step_scale(prior_scales: np.ndarray) -> np.ndarray:
    """2.4 / sqrt(D) times a per-dimension scale."""
    prior_scales = np.atleast_1d(np.asarray(prior_scales, dtype=float))
    return 2.4 / math.sqrt(prior_scales.shape[0]) * prior_scales


def rwmh_sample(
    model: Model,
    init: np.ndarray,
    n_samples: int,
    burn_in: int,
    step_scale: np.ndarray,
    rng: np.random.Generator,
    thin: int = 10,
) -> ReferenceSampleSet:
    """Random-walk Metropolis-Hastings reference sampler.

    Gaussian proposals with componentwise step_scale; keeps every
    thin-th state after burn_in.  Every density call is a model
    evaluation.  Raises NonMixingError when nothing is accepted after
    burn-in.
    """
    if n_samples < 1 or burn_in < 0 or thin < 1:
        raise ValueError("need n_samples >= 1, burn_in >= 0, thin >= 1")
    z = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    scale = np.broadcast_to(np.asarray(step_scale, dtype=float), z.shape)
    if np.any(scale <= 0):
        raise ValueError("step_scale entries must be positive")
    lp = model.log_joint(z)
    if lp == -np.inf:
        raise ValueError("init point has zero posterior density")
    total = burn_in + n_samples * thin
    samples = np.empty((n_samples, z.shape[0]))
    log_joints = np.empty(n_samples)
    accepted = 0
    kept = 0
    for it in range(total):
        proposal = z + scale * rng.standard_normal(z.shape[0])
        lp_prop = model.log_joint(proposal)
        if math.log(rng.random()) < lp_prop - lp:
            z, lp = proposal, lp_prop
            if it >= burn_in:
                accepted += 1
        if it >= burn_in and (it - burn_in) % thin == thin - 1:
            samples[kept] = z
            log_joints[kept] = lp
            kept += 1
    if accepted == 0:
        raise NonMixingError("no proposals accepted after burn-in")
    return ReferenceSampleSet(
        samples=samples,
        log_joints=log_joints,
        provenance="rwmh",
        acceptance_rate=accepted / (n_samples * thin),
    )


def tune_rwmh_scale(
    model: Model,
    init: np.ndarray,
    base_scale: np.ndarray,
    rng: np.random.Generator,
    multipliers=(3.0, 1.0, 0.3, 0.1, 0.03, 0.01),
    pilot_steps: int = 200,
    target: float = 0.3,
) -> np.ndarray:
    """Pick the step-scale multiplier whose pilot acceptance is nearest target."""
    base = np.atleast_1d(np.asarray(base_scale, dtype=float))
    best_scale, best_gap = None, math.inf
    for mult in multipliers:
        try:
            pilot = rwmh_sample(
                model, init, n_samples=pilot_steps, burn_in=0, step_scale=mult * base,
                rng=rng, thin=1,
            )
            acc = pilot.acceptance_rate
        except NonMixingError:
            acc = 0.0
        gap = abs(acc - target)
        if gap < best_gap:
            best_gap, best_scale = gap, mult * base
    return best_scale
