"""A tiny fixed problem for finite-difference gradient checks."""

from __future__ import annotations

import numpy as np

from .checkpoint import build_model
from .data import CATEGORICAL, NUMERICAL, Batch, FieldSchema
from .model import Model, ModelConfig

GRADCHECK_TOLERANCE = 1e-4


def tiny_schema() -> list[FieldSchema]:
    return [
        FieldSchema(0, "c0", CATEGORICAL, 5, ("a", "b", "c", "d")),
        FieldSchema(1, "c1", CATEGORICAL, 4, ("x", "y", "z")),
        FieldSchema(2, "n2", NUMERICAL),
    ]


def tiny_problem(kind: str = "afn", seed: int = 0, bn: bool = True, batch_size: int = 8,
                 ln_bn_site: str = "ln") -> tuple[Model, Batch]:
    """m=3 fields (two categorical, one numerical), k=2, N=2, one hidden layer of width 3.

    Embeddings start at scale 50 (entries in [-0.5, 0.5]) so coordinates sit
    well away from the |x| kink and the positivity floor, where central
    differences with h=1e-5 resolve the curvature of ln.
    """
    schema = tiny_schema()
    cfg = ModelConfig(embed_dim=2, log_neurons=2, hidden=(3,), bn=bn, ln_bn_site=ln_bn_site,
                      max_order=3, init_scale=50.0)
    model = build_model(kind, schema, cfg, seed=seed)
    rng = np.random.default_rng([seed, 17])
    for name, p in model.params.items():
        # nonzero biases and linear weights so no gradient is trivially zero
        if name.endswith((".b", "bias", ".beta")) or ".w." in name:
            p[...] = rng.normal(scale=0.3, size=p.shape)
    idx = np.stack([rng.integers(0, 5, batch_size), rng.integers(0, 4, batch_size),
                    np.zeros(batch_size, dtype=np.int64)], axis=1)
    val = np.ones((batch_size, 3))
    val[:, 2] = rng.normal(size=batch_size)
    labels = (np.arange(batch_size) % 2).astype(np.float64)
    return model, Batch(labels, idx, val)
