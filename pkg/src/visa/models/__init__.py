from .gaussian import GaussianTarget, make_dense_cov, make_diag_cov
from .lgssm import LgssmModel, kalman_loglik
from .lotka_volterra import (
    LotkaVolterraModel,
    lv_log_joint,
    lv_rhs,
    lv_simulate_data,
    rk4_integrate,
)
from .particle_filter import bootstrap_pf
from .pickover import PickoverModel, pickover_log_joint, pickover_step, simulate_pickover_data

__all__ = [
    "GaussianTarget",
    "LgssmModel",
    "LotkaVolterraModel",
    "PickoverModel",
    "bootstrap_pf",
    "kalman_loglik",
    "lv_log_joint",
    "lv_rhs",
    "lv_simulate_data",
    "make_dense_cov",
    "make_diag_cov",
    "pickover_log_joint",
    "pickover_step",
    "rk4_integrate",
    "simulate_pickover_data",
]
