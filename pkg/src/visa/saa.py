"""Sample-average approximations of the forward KL and the refresh loop.

A sample-average approximation (SAA) freezes a batch of proposal draws
together with their model log-joints and self-normalized importance
weights.  Between refreshes the surrogate

    L(phi) = sum_i w_i * (log p(y, z_i) - log q_phi(z_i))

is a deterministic function of phi that costs no model evaluations to
evaluate or differentiate: the weights and log-joints are cached, so
only log q_phi changes.

visa_run optimizes this surrogate and rebuilds it whenever the updated
parameters leave the proposal's trust region, measured by the effective
sample size of the density ratio q_phi / q_proposal on the cached draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import DegenerateWeightsError, OutOfSupportError
from .families import VariationalParams, log_densities, sample, score_gradients
from .model import Model
from .optim import OptimizerConfig, init_state, step


def normalize_log_weights(log_w: np.ndarray) -> np.ndarray:
    """Self-normalized weights from log weights; -inf entries get weight 0.

    Raises DegenerateWeightsError when every entry is -inf.
    """
    log_w = np.atleast_1d(np.asarray(log_w, dtype=float))
    if np.any(np.isnan(log_w)) or np.any(log_w == np.inf):
        raise ValueError("log weights must be finite or -inf")
    m = np.max(log_w)
    if m == -np.inf:
        raise DegenerateWeightsError("all log weights are -inf")
    w = np.exp(log_w - m)
    return w / w.sum()


def ess(weights: np.ndarray) -> float:
    """Effective sample size fraction (sum w)^2 / (N sum w^2), in (0, 1]."""
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    s = w.sum()
    return float(s * s / (w.shape[0] * np.dot(w, w)))


@dataclass(frozen=True, eq=False)
class SaaState:
    """Frozen sample-average approximation anchored at proposal_params."""

    proposal_params: VariationalParams
    samples: np.ndarray  # (n, dim)
    cached_log_joint: np.ndarray  # (n,)
    cached_log_q_proposal: np.ndarray  # (n,)
    weights: np.ndarray  # (n,) self-normalized

    def __post_init__(self):
        for name in ("samples", "cached_log_joint", "cached_log_q_proposal", "weights"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.samples.shape[0]
        if not (
            self.cached_log_joint.shape
            == self.cached_log_q_proposal.shape
            == self.weights.shape
            == (n,)
        ):
            raise ValueError("inconsistent SAA array shapes")

    @property
    def n(self) -> int:
        return self.samples.shape[0]


def build_saa(
    model: Model, proposal_params: VariationalParams, n: int, rng: np.random.Generator
) -> SaaState:
    """Draw n proposal samples, evaluate the model on each (n model evals)."""
    if n < 2:
        raise ValueError("an SAA needs at least 2 samples")
    if model.dim != proposal_params.dim:
        raise ValueError("model and family dimensions differ")
    samples = sample(proposal_params, n, rng)
    log_joint = np.array([model.log_joint(z) for z in samples])
    log_q = log_densities(proposal_params, samples)
    weights = normalize_log_weights(log_joint - log_q)
    return SaaState(
        proposal_params=proposal_params,
        samples=samples,
        cached_log_joint=log_joint,
        cached_log_q_proposal=log_q,
        weights=weights,
    )


def saa_objective(state: SaaState, params: VariationalParams) -> float:
    """Surrogate forward-KL objective at params; no model evaluations.

    Returns +inf when any positively weighted cached sample falls outside
    the support of q_params (the optimizer stepped out of the family's
    support).  Zero-weight samples cannot contribute and are skipped.
    """
    log_q = log_densities(params, state.samples)
    active = state.weights > 0
    if np.any(log_q[active] == -np.inf):
        return math.inf
    return float(
        np.dot(state.weights[active], state.cached_log_joint[active] - log_q[active])
    )


def saa_gradient(state: SaaState, params: VariationalParams) -> np.ndarray:
    """Gradient of the surrogate at params; no model evaluations.

    The cached weights do not depend on params, so the gradient is
    -sum_i w_i d/dphi log q_phi(z_i).  Mirrors saa_objective's error
    behaviour: an out-of-support positively weighted sample raises.
    """
    log_q = log_densities(params, state.samples)
    active = state.weights > 0
    if np.any(log_q[active] == -np.inf):
        raise OutOfSupportError("cached sample outside the support of q_params")
    grads = score_gradients(params, state.samples[active])
    return -(state.weights[active] @ grads)


def trust_score(state: SaaState, params: VariationalParams) -> float:
    """ESS fraction of the density ratio q_params / q_proposal on the cache.

    Equals 1.0 exactly at the proposal itself; samples outside the
    support of q_params contribute ratio 0; all-zero ratios give 0.0
    (forcing a refresh).
    """
    log_q = log_densities(params, state.samples)
    log_v = log_q - state.cached_log_q_proposal
    m = np.max(log_v)
    if m == -np.inf:
        return 0.0
    v = np.exp(log_v - m)
    s = v.sum()
    return float(s * s / (v.shape[0] * np.dot(v, v)))


@dataclass(frozen=True)
class VisaConfig:
    """Settings for visa_run.

    ess_threshold is the trust level alpha in (0, 1]: after each step the
    SAA is rebuilt when the trust score drops to alpha or below.  At
    alpha = 1 any parameter movement triggers a rebuild, which makes the
    method draw fresh samples every step.
    """

    n_samples: int
    ess_threshold: float
    step_budget: int
    optimizer: OptimizerConfig = OptimizerConfig()
    snapshot_every: int = 10
    eval_budget: Optional[int] = None

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if not (0.0 < self.ess_threshold <= 1.0):
            raise ValueError("ess_threshold must lie in (0, 1]")
        if self.step_budget < 1:
            raise ValueError("step_budget must be >= 1")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")


@dataclass
class OptTrace:
    """Per-step history of one optimization run.

    model_evals[t] counts the evaluations invested in the parameters
    reported at step t, i.e. the count just before any post-step refresh;
    refreshed[t] marks that a refresh (costing exactly n_samples
    evaluations) ran at the end of step t.  total_model_evals is the full
    counter delta for the run, including a trailing refresh:
    n_samples * (1 + number of refreshes).
    """

    steps: List[int] = field(default_factory=list)
    model_evals: List[int] = field(default_factory=list)
    train_loss: List[float] = field(default_factory=list)
    refreshed: List[bool] = field(default_factory=list)
    snapshots: List[Tuple[int, VariationalParams]] = field(default_factory=list)
    snapshot_every: int = 10
    total_model_evals: int = 0


Observer = Callable[[int, int, float, bool, Optional[VariationalParams], np.ndarray], None]


def _is_snapshot_step(t: int, every: int, last: int) -> bool:
    return t == 1 or t % every == 0 or t == last


def visa_run(
    model: Model,
    init_params: VariationalParams,
    config: VisaConfig,
    rng: np.random.Generator,
    observer: Optional[Observer] = None,
) -> Tuple[VariationalParams, OptTrace]:
    """Optimize the forward KL through sequential SAAs with trust regions.

    Per step: take one optimizer step on the current surrogate (zero
    model evaluations), then rebuild the SAA at the new parameters when
    they left the trust region.  Returns the final parameters and the
    step trace.  An observer, when given, is called once per step with
    (step, model_evals, train_loss, refreshed, params_or_None, gradient);
    params is passed on snapshot steps only.

    A refresh is skipped when the score is exactly 1 (the parameters did
    not move), so a zero learning rate costs n_samples evaluations total
    regardless of the threshold.
    """
    trace = OptTrace(snapshot_every=config.snapshot_every)
    start_count = model.eval_count
    params = init_params
    vec = params.to_vector()
    opt_state = init_state(config.optimizer, vec.shape[0])
    try:
        state = build_saa(model, params, config.n_samples, rng)
    except DegenerateWeightsError as err:
        err.trace = trace
        trace.total_model_evals = model.eval_count - start_count
        raise
    trace.snapshots.append((0, params))
    last = config.step_budget
    for t in range(1, last + 1):
        loss = saa_objective(state, params)
        grad = saa_gradient(state, params)
        vec, opt_state = step(opt_state, vec, grad)
        params = params.with_vector(vec)
        evals_now = model.eval_count - start_count
        score = trust_score(state, params)
        refreshed = score <= config.ess_threshold and score < 1.0
        if refreshed:
            try:
                state = build_saa(model, params, config.n_samples, rng)
            except DegenerateWeightsError as err:
                err.trace = trace
                trace.total_model_evals = model.eval_count - start_count
                raise
        snap = _is_snapshot_step(t, config.snapshot_every, last)
        trace.steps.append(t)
        trace.model_evals.append(evals_now)
        trace.train_loss.append(loss)
        trace.refreshed.append(refreshed)
        if snap:
            trace.snapshots.append((t, params))
        if observer is not None:
            observer(t, evals_now, loss, refreshed, params if snap else None, grad)
        if (
            config.eval_budget is not None
            and model.eval_count - start_count >= config.eval_budget
        ):
            break
    trace.total_model_evals = model.eval_count - start_count
    return params, trace
