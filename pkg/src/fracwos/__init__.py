"""Walk-on-Spheres solver for the fractional Dirichlet problem.

Solves (-Delta)^(alpha/2) u = f in D, u = g on the complement of D,
for the unit ball, by simulating the walk-on-spheres chain of an
isotropic alpha-stable process.  Pointwise Monte Carlo estimates are
turned into a training set for a fixed-architecture ReLU network that
approximates u on the whole domain.
"""

from .errors import ConfigError, DataError, NumericsError
from .sampler import FractionalParams, RngStream, DirectionMode
from .wos import Ball, Domain, WosPath, simulate_wos_path, exit_steps
from .estimator import (
    EstimatorConfig,
    TrainingSet,
    estimate_u,
    estimate_u_samples,
    generate_training_set,
    kappa,
)
from .nn import (
    MlpModel,
    TrainConfig,
    TrainResult,
    init_mlp,
    realize,
    realize_batch,
    train,
    save_checkpoint,
    load_checkpoint,
)
from .problems import ProblemSpec, MetricReport, get_example, evaluate_model

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "NumericsError",
    "FractionalParams",
    "RngStream",
    "DirectionMode",
    "Ball",
    "Domain",
    "WosPath",
    "simulate_wos_path",
    "exit_steps",
    "EstimatorConfig",
    "TrainingSet",
    "estimate_u",
    "estimate_u_samples",
    "generate_training_set",
    "kappa",
    "MlpModel",
    "TrainConfig",
    "TrainResult",
    "init_mlp",
    "realize",
    "realize_batch",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "ProblemSpec",
    "MetricReport",
    "get_example",
    "evaluate_model",
    "__version__",
]
