"""Consistent global counterfactual explanations between groups."""

from ._core import (
    ConfigError,
    DataError,
    Error,
    ExplanationSet,
    NumericError,
    ReprModel,
    adjusted_rand_index,
    calibrate_epsilon,
    compare_explanations,
    correctness,
    coverage,
    dbm,
    generate_synthetic,
    kmeans,
    modify_dataset,
    pairwise_report,
    similarity,
    soft_threshold,
    sparsity_sweep,
    standardize,
    tgt,
    threshold_k,
    train_encoder,
    tune_lambda,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "ExplanationSet",
    "NumericError",
    "ReprModel",
    "adjusted_rand_index",
    "calibrate_epsilon",
    "compare_explanations",
    "correctness",
    "coverage",
    "dbm",
    "generate_synthetic",
    "kmeans",
    "modify_dataset",
    "pairwise_report",
    "similarity",
    "soft_threshold",
    "sparsity_sweep",
    "standardize",
    "tgt",
    "threshold_k",
    "train_encoder",
    "tune_lambda",
]
