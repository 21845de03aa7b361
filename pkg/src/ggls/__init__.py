"""Grassmannian graph-attentional landmark selection for domain adaptation."""

__version__ = "0.1.0"

from .config import GglsConfig, load_config
from .data import (DomainDataset, SyntheticShiftSpec, generate_synthetic,
                   load_dataset, normalize)
from .errors import (ConfigError, DataFormatError, EvalError, GglsError,
                     InvalidSubspaceError, NumericError, SingularSystemError)
from .evaluation import ablation_suite, accuracy, baseline_1nn
from .solver import FittedModel, fit, predict

__all__ = [
    "ConfigError", "DataFormatError", "DomainDataset", "EvalError", "FittedModel",
    "GglsConfig", "GglsError", "InvalidSubspaceError", "NumericError",
    "SingularSystemError", "SyntheticShiftSpec", "ablation_suite", "accuracy",
    "baseline_1nn", "fit", "generate_synthetic", "load_config", "load_dataset",
    "normalize", "predict",
]
