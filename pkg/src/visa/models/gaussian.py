"""Multivariate Gaussian targets for the closed-form benchmarks.

The log density is normalized, so the forward-KL objective against
these targets is directly comparable to a KL divergence (log Z = 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from ..model import Model

_LOG_2PI = float(np.log(2.0 * np.pi))


def make_diag_cov(dim: int, sigma_min: float = 0.1, sigma_max: float = 1.0) -> np.ndarray:
    """Diagonal covariance with variances linearly spaced over [sigma_min, sigma_max].

    Entry i (1-based) is sigma_min + (i - 1) * (sigma_max - sigma_min) / (dim - 1).
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if not (0 < sigma_min <= sigma_max):
        raise ValueError("need 0 < sigma_min <= sigma_max")
    return sigma_min + (sigma_max - sigma_min) * np.arange(dim) / (dim - 1)


def make_dense_cov(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Dense covariance M / ||M||_F + 0.1 I with M = A A^T, A_ij ~ U(0, 1).

    The Frobenius normalization plus the ridge keeps the smallest
    eigenvalue at 0.1 or above for any draw.
    """
    a = rng.random((dim, dim))
    m = a @ a.T
    return m / np.linalg.norm(m, ord="fro") + 0.1 * np.eye(dim)


@dataclass(frozen=True, eq=False)
class GaussianTarget:
    """Normalized Gaussian density with cached Cholesky factor."""

    cov: np.ndarray
    mean: Optional[np.ndarray] = None

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim == 1:
            cov = np.diag(cov)
        d = cov.shape[0]
        if cov.shape != (d, d):
            raise ValueError("cov must be square")
        mean = (
            np.zeros(d)
            if self.mean is None
            else np.atleast_1d(np.asarray(self.mean, dtype=float)).copy()
        )
        if mean.shape != (d,):
            raise ValueError("mean and cov dimensions differ")
        chol = np.linalg.cholesky(cov)
        log_norm = -0.5 * d * _LOG_2PI - np.log(np.diag(chol)).sum()
        cov = cov.copy()
        for arr in (mean, cov, chol):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_log_norm", float(log_norm))

    @classmethod
    def from_diag(cls, variances: np.ndarray, mean: Optional[np.ndarray] = None):
        return cls(cov=np.diag(np.asarray(variances, dtype=float)), mean=mean)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def chol(self) -> np.ndarray:
        return self._chol

    def log_density(self, z: np.ndarray) -> float:
        r = np.asarray(z, dtype=float) - self.mean
        u = solve_triangular(self._chol, r, lower=True, check_finite=False)
        return float(-0.5 * u @ u + self._log_norm)

    def grad_log_density(self, z: np.ndarray) -> np.ndarray:
        r = np.asarray(z, dtype=float) - self.mean
        return -cho_solve((self._chol, True), r, check_finite=False)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        xi = rng.standard_normal((n, self.dim))
        return self.mean + xi @ self._chol.T

    def as_model(self, name: str = "gaussian") -> Model:
        return Model(
            dim=self.dim,
            log_joint_fn=self.log_density,
            grad_log_joint_fn=self.grad_log_density,
            name=name,
        )
