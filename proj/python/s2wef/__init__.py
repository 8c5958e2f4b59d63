"""Free-rider detection for federated learning, backed by the C++ core."""

from ._s2wef import (
    ConfigError,
    Error,
    HistoryError,
    NumericError,
    ShapeError,
    build_wef,
    compute_metrics,
    counterfeit_one_step,
    decide_k,
    detect_round,
    dev_scores,
    dynamic_threshold,
    gamma_scores,
    parse_config,
    robust_standardize,
    run_simulation,
    simulate_global_wef,
    ward_hac,
)

__all__ = [
    "ConfigError",
    "Error",
    "HistoryError",
    "NumericError",
    "ShapeError",
    "build_wef",
    "compute_metrics",
    "counterfeit_one_step",
    "decide_k",
    "detect_round",
    "dev_scores",
    "dynamic_threshold",
    "gamma_scores",
    "parse_config",
    "robust_standardize",
    "run_simulation",
    "simulate_global_wef",
    "ward_hac",
]
