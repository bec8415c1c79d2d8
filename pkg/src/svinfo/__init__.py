"""Information-theoretic bounds for stochastic volatility models."""

__version__ = "0.1.0"

from .catalog import ModelSpec, builtin_models, get_model, load_spec, model_ids
from .estimate import KSGMutualInformation, conditional_mi, knn_mi
from .infobounds import full_report, info_gaps, leverage_mi, mi_proxy, u1_bound, u2_bound
from .simulate import SimConfig, simulate
from .stationary import stationary_law

__all__ = [
    "KSGMutualInformation",
    "ModelSpec",
    "SimConfig",
    "builtin_models",
    "conditional_mi",
    "full_report",
    "get_model",
    "info_gaps",
    "knn_mi",
    "leverage_mi",
    "load_spec",
    "mi_proxy",
    "model_ids",
    "simulate",
    "stationary_law",
    "u1_bound",
    "u2_bound",
]
