"""Black-box model interface: a log-joint with an evaluation counter.

A model evaluation is one call to log_joint, whatever it costs inside
(a full ODE solve, a particle-filter run, a closed-form density);
that count is the cost unit every comparison in this package uses.
"""

from __future__ import annotations

import math
import threading
from typing import Callable, Optional

import numpy as np

from .errors import UnsupportedModelError


class Model:
    """Wraps an unnormalized log-joint log p(y, z).

    log_joint must return a finite float or -inf (outside the prior
    support, failed simulation).  The evaluation counter is guarded by a
    lock so concurrent callers still see an exact count.
    """

    def __init__(
        self,
        dim: int,
        log_joint_fn: Callable[[np.ndarray], float],
        grad_log_joint_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        name: str = "",
    ):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        self.name = name
        self._fn = log_joint_fn
        self._grad_fn = grad_log_joint_fn
        self._count = 0
        self._lock = threading.Lock()

    @property
    def eval_count(self) -> int:
        return self._count

    @property
    def has_gradient(self) -> bool:
        return self._grad_fn is not None

    def log_joint(self, z: np.ndarray) -> float:
        with self._lock:
            self._count += 1
        value = float(self._fn(np.asarray(z, dtype=float)))
        if math.isnan(value) or value == math.inf:
            raise ValueError(
                f"log_joint must return a finite value or -inf, got {value!r}"
            )
        return value

    def grad_log_joint(self, z: np.ndarray) -> np.ndarray:
        """Analytic d/dz log p(y, z); not counted as a model evaluation."""
        if self._grad_fn is None:
            raise UnsupportedModelError(
                f"model {self.name or '<anonymous>'} has no analytic gradient"
            )
        return np.asarray(self._grad_fn(np.asarray(z, dtype=float)), dtype=float)
