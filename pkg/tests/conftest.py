"""Shared numeric helpers for the test suite."""

import numpy as np

from visa.families import EXP, IDENTITY, TanhBoxTransform, VariationalParams

UNIT_BOX = TanhBoxTransform(center=np.zeros(2), half_width=np.ones(2))


def fd_gradient(f, x, eps=1e-6):
    """Central finite differences of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=float)
    g = np.empty(x.shape)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += eps
        lo[i] -= eps
        g[i] = (f(hi) - f(lo)) / (2.0 * eps)
    return g


def grad_close(approx, exact, rel):
    """Vector gradient agreement: error norm relative to max(1, |exact|)."""
    err = np.linalg.norm(np.asarray(approx) - np.asarray(exact))
    return err <= rel * max(1.0, float(np.linalg.norm(exact)))


def random_params(rng, dim, full=False, transform=IDENTITY, mean_scale=1.0):
    """A generic family member with O(1) scales, away from support edges."""
    mean = mean_scale * rng.normal(size=dim)
    log_diag = 0.3 * rng.normal(size=dim)
    lower = 0.2 * rng.normal(size=(dim, dim)) if full else None
    return VariationalParams(mean=mean, log_diag=log_diag, lower=lower, transform=transform)


def family_cases(rng, dim=3, n_cases=100):
    """Random (name, params) pairs covering every transform/shape combo."""
    box = TanhBoxTransform(center=np.zeros(dim), half_width=2.0 * np.ones(dim))
    cases = []
    for _ in range(n_cases):
        cases.append(("identity-diag", random_params(rng, dim)))
        cases.append(("identity-full", random_params(rng, dim, full=True)))
        cases.append(("exp-diag", random_params(rng, dim, transform=EXP, mean_scale=0.5)))
        cases.append(
            ("tanh-diag", random_params(rng, dim, transform=box, mean_scale=0.3))
        )
    return cases
