"""Gaussian variational families with optional output transforms.

A family is a Gaussian in an unconstrained base space (mean plus a
diagonal or lower-triangular Cholesky scale) pushed through an optional
componentwise transform:

    z = T(mean + scale @ xi),   xi ~ N(0, I).

Densities include the change-of-variables term.  Score gradients are
exact and taken with respect to the free parameters only; the transform
constants are fixed, so the Jacobian term contributes nothing to the
score.  The scale diagonal is stored as its log, which keeps it positive
under unconstrained optimization.

Free parameters are exchanged with optimizers as a flat vector laid out
as [mean, log_diag, strict-lower entries (row-major)].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Optional, Union

import numpy as np
from scipy.linalg import solve_triangular

from .errors import OutOfSupportError, UnsupportedFamilyError

_LOG_2PI = float(np.log(2.0 * np.pi))


class IdentityTransform:
    """z = x on all of R^D."""

    name = "identity"

    def forward(self, x):
        return np.array(x, dtype=float)

    def inverse_parts(self, z):
        """Return (x, log|det dz/dx|, in_support) row-wise for a (n, D) batch."""
        z = np.array(z, dtype=float)
        ok = np.isfinite(z).all(axis=1)
        return z, np.zeros(z.shape[0]), ok

    def forward_with_deriv(self, x):
        x = np.asarray(x, dtype=float)
        return x.copy(), np.ones_like(x)


class ExpTransform:
    """z = exp(x) componentwise; support is the positive orthant."""

    name = "exp"

    def forward(self, x):
        return np.exp(np.asarray(x, dtype=float))

    def inverse_parts(self, z):
        z = np.asarray(z, dtype=float)
        ok = np.isfinite(z).all(axis=1) & (z > 0).all(axis=1)
        x = np.full(z.shape, np.nan)
        logj = np.full(z.shape[0], -np.inf)
        if np.any(ok):
            lz = np.log(z[ok])
            x[ok] = lz
            logj[ok] = lz.sum(axis=1)
        return x, logj, ok

    def forward_with_deriv(self, x):
        e = np.exp(np.asarray(x, dtype=float))
        return e, e


@dataclass(frozen=True, eq=False)
class TanhBoxTransform:
    """z = center + half_width * tanh(x); support is the open box."""

    center: np.ndarray
    half_width: np.ndarray

    name: ClassVar[str] = "tanh-box"

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        w = np.atleast_1d(np.asarray(self.half_width, dtype=float)).copy()
        if c.shape != w.shape:
            raise ValueError("center and half_width must have the same shape")
        if not np.all(w > 0):
            raise ValueError("half_width entries must be positive")
        c.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_width", w)

    def forward(self, x):
        t = np.tanh(np.asarray(x, dtype=float))
        # keep samples strictly inside the box even when tanh rounds to +-1
        t = np.clip(t, np.nextafter(-1.0, 0.0), np.nextafter(1.0, 0.0))
        return self.center + self.half_width * t

    def inverse_parts(self, z):
        z = np.asarray(z, dtype=float)
        u = (z - self.center) / self.half_width
        ok = np.isfinite(z).all(axis=1) & (np.abs(u) < 1).all(axis=1)
        x = np.full(z.shape, np.nan)
        logj = np.full(z.shape[0], -np.inf)
        if np.any(ok):
            uo = u[ok]
            x[ok] = np.arctanh(uo)
            logj[ok] = (np.log(self.half_width) + np.log1p(-uo * uo)).sum(axis=1)
        return x, logj, ok

    def forward_with_deriv(self, x):
        raise UnsupportedFamilyError(
            "tanh-box transform has no pathwise (reparameterized) path"
        )


Transform = Union[IdentityTransform, ExpTransform, TanhBoxTransform]

IDENTITY = IdentityTransform()
EXP = ExpTransform()


@dataclass(frozen=True, eq=False)
class VariationalParams:
    """Free parameters of one transformed-Gaussian family member.

    mean and log_diag are (D,) vectors; lower, when present, is the
    strictly-lower-triangular part of the Cholesky factor and marks the
    family as full-covariance.  Arrays are stored read-only; derive new
    values with with_vector.
    """

    mean: np.ndarray
    log_diag: np.ndarray
    lower: Optional[np.ndarray] = None
    transform: Transform = IDENTITY

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float)).copy()
        log_diag = np.atleast_1d(np.asarray(self.log_diag, dtype=float)).copy()
        if mean.ndim != 1 or mean.shape != log_diag.shape:
            raise ValueError("mean and log_diag must be equal-length vectors")
        d = mean.shape[0]
        lower = self.lower
        if lower is not None:
            lower = np.asarray(lower, dtype=float)
            if lower.shape != (d, d):
                raise ValueError("lower must be a (dim, dim) matrix")
            lower = np.tril(lower, k=-1)
        if isinstance(self.transform, TanhBoxTransform):
            if self.transform.center.shape != (d,):
                raise ValueError("tanh-box constants must match the dimension")
        for arr in (mean, log_diag, lower):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "log_diag", log_diag)
        object.__setattr__(self, "lower", lower)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def is_full(self) -> bool:
        return self.lower is not None

    @property
    def n_free(self) -> int:
        d = self.dim
        return 2 * d + (d * (d - 1) // 2 if self.is_full else 0)

    @property
    def scale_tril(self) -> np.ndarray:
        l = np.diag(np.exp(self.log_diag))
        if self.lower is not None:
            l = l + self.lower
        return l

    def to_vector(self) -> np.ndarray:
        parts = [self.mean, self.log_diag]
        if self.is_full:
            ii, jj = np.tril_indices(self.dim, k=-1)
            parts.append(self.lower[ii, jj])
        return np.concatenate(parts)

    def with_vector(self, vec: np.ndarray) -> "VariationalParams":
        """New params of the same family shape/transform from a flat vector."""
        vec = np.asarray(vec, dtype=float)
        d = self.dim
        if vec.shape != (self.n_free,):
            raise ValueError(f"expected a flat vector of length {self.n_free}")
        lower = None
        if self.is_full:
            lower = np.zeros((d, d))
            ii, jj = np.tril_indices(d, k=-1)
            lower[ii, jj] = vec[2 * d :]
        return VariationalParams(
            mean=vec[:d], log_diag=vec[d : 2 * d], lower=lower, transform=self.transform
        )


def sample(params: VariationalParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n samples, one per row: z = T(mean + scale @ xi)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xi = rng.standard_normal((n, params.dim))
    x = params.mean + xi @ params.scale_tril.T
    return params.transform.forward(x)


def _base_log_density(params: VariationalParams, x: np.ndarray) -> np.ndarray:
    l = params.scale_tril
    r = x - params.mean
    u = solve_triangular(l, r.T, lower=True, check_finite=False).T
    quad = np.einsum("ij,ij->i", u, u)
    # sum(log diag L) == sum(log_diag) by construction
    return -0.5 * quad - params.log_diag.sum() - 0.5 * params.dim * _LOG_2PI


def log_densities(params: VariationalParams, zs: np.ndarray) -> np.ndarray:
    """Log density of each row of zs; -inf outside the support."""
    zs = np.atleast_2d(np.asarray(zs, dtype=float))
    if zs.shape[1] != params.dim:
        raise ValueError("dimension mismatch")
    x, logj, ok = params.transform.inverse_parts(zs)
    out = np.full(zs.shape[0], -np.inf)
    if np.any(ok):
        out[ok] = _base_log_density(params, x[ok]) - logj[ok]
    return out


def log_density(params: VariationalParams, z: np.ndarray) -> float:
    return float(log_densities(params, np.atleast_1d(np.asarray(z, dtype=float))[None, :])[0])


def _solve_pair(params: VariationalParams, x: np.ndarray):
    """u = L^-1 (x - m) and a = L^-T u for a batch of base-space points."""
    l = params.scale_tril
    r = x - params.mean
    u = solve_triangular(l, r.T, lower=True, check_finite=False).T
    a = solve_triangular(l.T, u.T, lower=False, check_finite=False).T
    return u, a


def score_gradients(params: VariationalParams, zs: np.ndarray) -> np.ndarray:
    """Per-row gradient of log q_params(z) with respect to the flat parameters.

    Rows outside the support raise OutOfSupportError: there the density
    is identically zero and no score exists.
    """
    zs = np.atleast_2d(np.asarray(zs, dtype=float))
    if zs.shape[1] != params.dim:
        raise ValueError("dimension mismatch")
    x, _, ok = params.transform.inverse_parts(zs)
    if not np.all(ok):
        raise OutOfSupportError("sample outside the support of the family")
    u, a = _solve_pair(params, x)
    g_mean = a
    g_log_diag = a * u * np.exp(params.log_diag) - 1.0
    if params.is_full:
        ii, jj = np.tril_indices(params.dim, k=-1)
        g_lower = a[:, ii] * u[:, jj]
        return np.concatenate([g_mean, g_log_diag, g_lower], axis=1)
    return np.concatenate([g_mean, g_log_diag], axis=1)


def score_gradient(params: VariationalParams, z: np.ndarray) -> np.ndarray:
    return score_gradients(params, np.atleast_1d(np.asarray(z, dtype=float))[None, :])[0]


def pathwise_sample(params: VariationalParams, xi: np.ndarray):
    """Reparameterized draw z = T(mean + scale @ xi) and its parameter Jacobian.

    Returns (z, jac) with jac of shape (dim, n_free).  Only identity and
    exp transforms admit this path; tanh-box raises UnsupportedFamilyError.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (params.dim,):
        raise ValueError("xi must be a (dim,) vector")
    l = params.scale_tril
    x = params.mean + l @ xi
    z, dz = params.transform.forward_with_deriv(x)
    d = params.dim
    jac_mean = dz[:, None] * np.eye(d)
    jac_log_diag = np.diag(dz * np.exp(params.log_diag) * xi)
    blocks = [jac_mean, jac_log_diag]
    if params.is_full:
        ii, jj = np.tril_indices(d, k=-1)
        jac_lower = np.zeros((d, ii.size))
        jac_lower[ii, np.arange(ii.size)] = dz[ii] * xi[jj]
        blocks.append(jac_lower)
    return z, np.concatenate(blocks, axis=1)


def grad_log_density_z(params: VariationalParams, z: np.ndarray) -> np.ndarray:
    """d/dz log q_params(z), for identity and exp transforms."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    x, _, ok = params.transform.inverse_parts(z[None, :])
    if not ok[0]:
        raise OutOfSupportError("z outside the support of the family")
    _, a = _solve_pair(params, x)
    if params.transform.name == "identity":
        return -a[0]
    if params.transform.name == "exp":
        return (-a[0] - 1.0) / z
    raise UnsupportedFamilyError("z-gradient implemented for identity and exp only")
