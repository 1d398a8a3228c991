"""Over-parametrized sigmoid-network regression trained by plain gradient
descent, plus the numerical machinery to check the analysis that backs it:
exact gradients with independent oracles, descent invariant monitors, an
explicit indicator-grid approximation, covering-number estimation, scaling
probes, and Monte Carlo rate experiments.
"""

from .network import (
    Architecture,
    Dataset,
    Estimator,
    GradientVector,
    WeightVector,
    empirical_risk,
    forward,
    hidden_outputs,
    predict,
    sigmoid,
    truncate,
    weight_count,
)
from .gradients import fd_grad, grad_formula_direct, grad_risk
from .initialization import TheoryParams, init_weights, theory_params
from .training import DivergenceError, TrainConfig, TrainingTrace, fit_estimator, train
from .interaction import (
    InteractionArchitecture,
    InteractionEstimator,
    interaction_fit,
    interaction_forward,
    interaction_init,
)
from .experiments import (
    TARGETS,
    ExperimentConfig,
    RateReport,
    TargetSpec,
    generate,
    get_target,
    interaction_sweep,
    mc_l2_error,
    rate_sweep,
)

__all__ = [
    "Architecture",
    "Dataset",
    "Estimator",
    "GradientVector",
    "WeightVector",
    "empirical_risk",
    "forward",
    "hidden_outputs",
    "predict",
    "sigmoid",
    "truncate",
    "weight_count",
    "fd_grad",
    "grad_formula_direct",
    "grad_risk",
    "TheoryParams",
    "init_weights",
    "theory_params",
    "DivergenceError",
    "TrainConfig",
    "TrainingTrace",
    "fit_estimator",
    "train",
    "InteractionArchitecture",
    "InteractionEstimator",
    "interaction_fit",
    "interaction_forward",
    "interaction_init",
    "TARGETS",
    "ExperimentConfig",
    "RateReport",
    "TargetSpec",
    "generate",
    "get_target",
    "interaction_sweep",
    "mc_l2_error",
    "rate_sweep",
]

__version__ = "0.1.0"
