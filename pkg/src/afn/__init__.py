"""Adaptive factorization networks in NumPy with explicit backward passes."""

from .checkpoint import build_model, load_checkpoint, save_checkpoint
from .data import Dataset, FieldSchema, Instance, batch_iter, fit_schema, load_dataset, split
from .ensemble import EnsembleParams, ensemble_logit, train_ensemble
from .metrics import auc, logloss
from .model import ModelConfig
from .network import AFN
from .training import TrainConfig, evaluate, grad_check, train

__version__ = "0.1.0"

__all__ = [
    "AFN", "Dataset", "EnsembleParams", "FieldSchema", "Instance", "ModelConfig", "TrainConfig",
    "auc", "batch_iter", "build_model", "ensemble_logit", "evaluate", "fit_schema", "grad_check",
    "load_checkpoint", "load_dataset", "logloss", "save_checkpoint", "split", "train",
    "train_ensemble",
]
