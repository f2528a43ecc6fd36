"""Forward-KL variational inference with sample-average surrogates.

The core loop (visa_run) reuses one importance-weighted sample average
across optimizer steps and refreshes it only when an ESS-based trust
score says the parameters moved too far; iwfvi/bbvi baselines and the
benchmark models, metrics, and CLI live alongside it.
"""

from .errors import (
    ConfigError,
    DegenerateWeightsError,
    IntegrationError,
    NonFiniteGradientError,
    NonMixingError,
    OutOfSupportError,
    UnsupportedFamilyError,
    UnsupportedModelError,
    VisaError,
)
from .families import (
    EXP,
    IDENTITY,
    ExpTransform,
    IdentityTransform,
    TanhBoxTransform,
    VariationalParams,
    log_densities,
    log_density,
    pathwise_sample,
    sample,
    score_gradient,
    score_gradients,
)
from .model import Model
from .optim import OptimizerConfig, OptimizerState, init_state, step
from .saa import (
    OptTrace,
    SaaState,
    VisaConfig,
    build_saa,
    ess,
    normalize_log_weights,
    saa_gradient,
    saa_objective,
    trust_score,
    visa_run,
)
from .estimators import (
    GradEstimate,
    bbvi_rp_gradient,
    bbvi_sf_gradient,
    iwfvi_gradient,
)
from .metrics import (
    ReferenceSampleSet,
    gaussian_kl,
    oracle_upper_bound,
    rwmh_sample,
    symmetric_kl,
    tune_rwmh_scale,
)
from .rng import make_rng, substream
from .config import ExperimentConfig, parse_config, parse_config_dict
from .runner import (
    Cell,
    RunResult,
    TraceRow,
    cell_filename,
    expand_cells,
    parse_trace_csv,
    run_baseline,
    run_experiment,
)
from .plotting import plot_traces

__version__ = "0.1.0"

__all__ = [
    "Cell",
    "ConfigError",
    "DegenerateWeightsError",
    "EXP",
    "ExperimentConfig",
    "ExpTransform",
    "GradEstimate",
    "IDENTITY",
    "IdentityTransform",
    "IntegrationError",
    "Model",
    "NonFiniteGradientError",
    "NonMixingError",
    "OptTrace",
    "OptimizerConfig",
    "OptimizerState",
    "OutOfSupportError",
    "ReferenceSampleSet",
    "RunResult",
    "SaaState",
    "TanhBoxTransform",
    "TraceRow",
    "UnsupportedFamilyError",
    "UnsupportedModelError",
    "VariationalParams",
    "VisaConfig",
    "VisaError",
    "bbvi_rp_gradient",
    "bbvi_sf_gradient",
    "build_saa",
    "cell_filename",
    "ess",
    "expand_cells",
    "gaussian_kl",
    "init_state",
    "iwfvi_gradient",
    "log_densities",
    "log_density",
    "make_rng",
    "normalize_log_weights",
    "oracle_upper_bound",
    "parse_config",
    "parse_config_dict",
    "parse_trace_csv",
    "pathwise_sample",
    "plot_traces",
    "run_baseline",
    "run_experiment",
    "rwmh_sample",
    "saa_gradient",
    "saa_objective",
    "sample",
    "score_gradient",
    "score_gradients",
    "step",
    "substream",
    "symmetric_kl",
    "trust_score",
    "tune_rwmh_scale",
    "visa_run",
]
