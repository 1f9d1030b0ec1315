"""Variational temporal IRT: amortized ability tracking with a 2PL response model."""

from ._core import (
    DataError,
    Model,
    ModelConfig,
    NumericalError,
    Record,
    SynthDataset,
    TrainConfig,
    UsageError,
    auroc,
    fit,
    load_dataset,
    load_model,
    make_model,
    marginals,
    next_step_auroc,
    pearson,
    potential_grid,
    predict,
    recovery,
    save_dataset,
    select_fold,
    simulate,
    smooth,
)

__all__ = [
    "DataError",
    "Model",
    "ModelConfig",
    "NumericalError",
    "Record",
    "SynthDataset",
    "TrainConfig",
    "UsageError",
    "auroc",
    "fit",
    "load_dataset",
    "load_model",
    "make_model",
    "marginals",
    "next_step_auroc",
    "pearson",
    "potential_grid",
    "predict",
    "recovery",
    "save_dataset",
    "select_fold",
    "simulate",
    "smooth",
]
