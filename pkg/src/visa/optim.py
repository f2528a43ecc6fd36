"""SGD and Adam on flat parameter vectors.

step is a pure function: it returns the updated vector and a new state
without mutating its inputs, so optimizer state can be checkpointed or
replayed freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonFiniteGradientError

KINDS = ("sgd", "adam")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        # lr = 0 is allowed: a no-op optimizer is useful for controls
        if self.lr < 0:
            raise ValueError("lr must be non-negative")


@dataclass(frozen=True)
class OptimizerState:
    config: OptimizerConfig
    t: int = 0
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None


def init_state(config: OptimizerConfig, n_params: int) -> OptimizerState:
    if config.kind == "sgd":
        return OptimizerState(config=config)
    zeros = np.zeros(n_params)
    return OptimizerState(config=config, t=0, m=zeros, v=zeros.copy())


def step(state: OptimizerState, params_vec: np.ndarray, grad: np.ndarray):
    """One descent step; returns (new_vec, new_state)."""
    params_vec = np.asarray(params_vec, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != params_vec.shape:
        raise ValueError("gradient and parameter vector shapes differ")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError("gradient contains NaN or infinite entries")
    cfg = state.config
    if cfg.kind == "sgd":
        return params_vec - cfg.lr * grad, OptimizerState(config=cfg, t=state.t + 1)
    t = state.t + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    new_vec = params_vec - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return new_vec, OptimizerState(config=cfg, t=t, m=m, v=v)
