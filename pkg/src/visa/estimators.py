"""Baseline stochastic-gradient estimators.

Each call draws what it needs, spends the stated number of model
evaluations, and returns a descent gradient for its objective:

- iwfvi_gradient: self-normalized importance-sampling gradient of the
  forward KL, n evaluations.  Definitionally identical to the gradient
  of a freshly built SAA at its own proposal.
- bbvi_sf_gradient: score-function (REINFORCE) gradient of the reverse
  KL with a leave-one-out baseline, n evaluations.
- bbvi_rp_gradient: single-sample reparameterized gradient of the
  reverse KL; needs an analytic model z-gradient, 1 evaluation.

The loss field carries the matching objective estimate (forward KL
surrogate for IWFVI, negative-ELBO for the BBVI pair), so traces from
different methods record their own training objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedModelError
from .families import (
    VariationalParams,
    grad_log_density_z,
    log_densities,
    pathwise_sample,
    sample,
    score_gradient,
    score_gradients,
)
from .model import Model
from .saa import build_saa, ess, normalize_log_weights, saa_gradient, saa_objective


@dataclass(frozen=True)
class GradEstimate:
    """One stochastic gradient: value, cost, and batch diagnostics."""

    gradient: np.ndarray
    model_evals: int
    batch_ess: float
    loss: float


def iwfvi_gradient(
    model: Model, params: VariationalParams, n: int, rng: np.random.Generator
) -> GradEstimate:
    """Forward-KL gradient from n fresh self-normalized importance samples."""
    state = build_saa(model, params, n, rng)
    grad = saa_gradient(state, params)
    loss = saa_objective(state, params)
    return GradEstimate(
        gradient=grad, model_evals=n, batch_ess=ess(state.weights), loss=loss
    )


def bbvi_sf_gradient(
    model: Model, params: VariationalParams, n: int, rng: np.random.Generator
) -> GradEstimate:
    """Score-function reverse-KL gradient with a leave-one-out baseline."""
    if n < 2:
        raise ValueError("the leave-one-out baseline needs n >= 2")
    zs = sample(params, n, rng)
    log_q = log_densities(params, zs)
    log_p = np.array([model.log_joint(z) for z in zs])
    f = log_q - log_p  # per-sample reverse-KL integrand
    baselines = (f.sum() - f) / (n - 1)
    coef = (f - baselines) / n
    grads = score_gradients(params, zs)
    grad = coef @ grads
    batch = ess(normalize_log_weights(log_p - log_q))
    return GradEstimate(gradient=grad, model_evals=n, batch_ess=batch, loss=float(f.mean()))


def bbvi_rp_gradient(
    model: Model, params: VariationalParams, rng: np.random.Generator
) -> GradEstimate:
    """Single-sample reparameterized reverse-KL gradient.

    Requires an analytic model gradient; restricted to families with a
    pathwise sampling path (identity or exp transform).
    """
    if not model.has_gradient:
        raise UnsupportedModelError(
            "reparameterized estimator needs a model with an analytic z-gradient"
        )
    xi = rng.standard_normal(params.dim)
    z, jac = pathwise_sample(params, xi)
    log_p = model.log_joint(z)  # the single model evaluation
    glp = model.grad_log_joint(z)
    glq = grad_log_density_z(params, z)
    grad = score_gradient(params, z) + jac.T @ (glq - glp)
    loss = float(log_densities(params, z[None, :])[0] - log_p)
    return GradEstimate(gradient=grad, model_evals=1, batch_ess=1.0, loss=loss)
