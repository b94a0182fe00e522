"""Reference models: logistic regression, FM, brute-force HOFM and a plain DNN.

FM and HOFM share one enumeration routine, so HOFM with ``max_order=2`` is
FM by construction. HOFM is brute force: every field subset of size 2..n is
visited, which is only practical for a dozen or so fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .data import Batch, FieldSchema
from .embedding import embed, embed_backward, init_tables
from .model import Model
from .network import INFER, DeepStack


@dataclass
class LinearParams:
    """Views into a model's param dict: one weight per vocabulary entry or numerical field."""

    weights: dict
    bias: np.ndarray


def weight_name(f: FieldSchema, prefix: str = "") -> str:
    kind = "cat" if f.is_categorical else "num"
    return f"{prefix}w.{kind}.{f.field_id}"


def init_linear(model: Model, prefix: str) -> None:
    for f in model.schema:
        model.params[weight_name(f, prefix)] = np.zeros(f.cardinality if f.is_categorical else 1)
    model.params[f"{prefix}bias"] = np.zeros(1)


def linear_params(model: Model, prefix: str) -> LinearParams:
    return LinearParams({f.field_id: model.params[weight_name(f, prefix)] for f in model.schema},
                        model.params[f"{prefix}bias"])


def lr_forward(batch: Batch, params: LinearParams, schema: list[FieldSchema]) -> np.ndarray:
    """``bias + sum of active categorical weights + sum_j w_j * x_j``."""
    out = np.full(len(batch), params.bias[0])
    for f in schema:
        w = params.weights[f.field_id]
        out = out + w[batch.idx[:, f.field_id]] * batch.val[:, f.field_id]
    return out


def lr_backward(batch: Batch, g: np.ndarray, model: Model, prefix: str) -> dict:
    grads = {f"{prefix}bias": np.array([g.sum()])}
    for f in model.schema:
        name = weight_name(f, prefix)
        acc = np.zeros_like(model.params[name])
        np.add.at(acc, batch.idx[:, f.field_id], g * batch.val[:, f.field_id])
        grads[name] = acc
    return grads


class OpCounter:
    """Counts element-wise multiply-adds spent on cross terms, per instance."""

    def __init__(self):
        self.multiply_adds = 0


def _subsets(m: int, r: int) -> np.ndarray:
    return np.array(list(combinations(range(m), r)), dtype=np.int64).reshape(-1, r)


def cross_term(E: np.ndarray, order: int, counter: OpCounter | None = None) -> np.ndarray:
    """Sum over all field subsets of size ``order`` of ``sum_d prod_{i in S} E[:, i, d]``."""
    m, k = E.shape[1], E.shape[2]
    subsets = _subsets(m, order)
    if counter is not None:
        counter.multiply_adds += len(subsets) * k
    if len(subsets) == 0:
        return np.zeros(E.shape[0])
    prods = np.prod(E[:, subsets, :], axis=2)  # [K, C, k]
    return prods.sum(axis=2).sum(axis=1)


def cross_term_backward(E: np.ndarray, order: int, g: np.ndarray) -> np.ndarray:
    m = E.shape[1]
    subsets = _subsets(m, order)
    dE = np.zeros_like(E)
    if len(subsets) == 0:
        return dE
    for p in range(order):
        others = np.delete(subsets, p, axis=1)
        partial = np.prod(E[:, others, :], axis=2)  # [K, C, k]
        incidence = np.zeros((len(subsets), m))
        incidence[np.arange(len(subsets)), subsets[:, p]] = 1.0
        dE += np.einsum("bcd,cm->bmd", partial * g[:, None, None], incidence)
    return dE


def fm_forward(batch: Batch, linear: LinearParams, tables: dict, schema: list[FieldSchema],
               prefix: str = "") -> np.ndarray:
    E = embed(batch, tables, schema, prefix)
    return lr_forward(batch, linear, schema) + cross_term(E, 2)


def hofm_forward(batch: Batch, linear: LinearParams, tables: dict, schema: list[FieldSchema],
                 max_order: int, prefix: str = "", counter: OpCounter | None = None) -> np.ndarray:
    m = len(schema)
    if not 2 <= max_order <= m:
        raise ValueError(f"max-order must be >= 2 and <= the number of fields ({m}), got {max_order}")
    E = embed(batch, tables, schema, prefix)
    out = lr_forward(batch, linear, schema)
    for r in range(2, max_order + 1):
        out = out + cross_term(E, r, counter)
    return out


class LR(Model):
    kind = "lr"
    prefix = "lr."

    def init_params(self, rng):
        init_linear(self, self.prefix)

    def forward(self, batch, mode=INFER):
        return lr_forward(batch, linear_params(self, self.prefix), self.schema), {"batch": batch}

    def backward(self, cache, grad_logits):
        return lr_backward(cache["batch"], grad_logits, self, self.prefix)


class HOFM(Model):
    """Linear term plus shared-embedding cross terms of orders 2..max_order."""

    kind = "hofm"
    prefix = "hofm."

    def __init__(self, schema, config=None, seed=0):
        super().__init__(schema, config, seed)
        n = self.max_order
        if not 2 <= n <= self.m:
            raise ValueError(f"max-order must be >= 2 and <= the number of fields ({self.m}), got {n}")

    @property
    def max_order(self) -> int:
        return self.config.max_order

    def init_params(self, rng):
        init_linear(self, self.prefix)
        self.params.update(init_tables(self.schema, self.config.embed_dim, rng,
                                       self.config.init_scale, self.prefix))

    def forward(self, batch, mode=INFER):
        E = embed(batch, self.params, self.schema, self.prefix)
        out = lr_forward(batch, linear_params(self, self.prefix), self.schema)
        for r in range(2, self.max_order + 1):
            out = out + cross_term(E, r)
        return out, {"batch": batch, "E": E}

    def backward(self, cache, grad_logits):
        batch, E = cache["batch"], cache["E"]
        grads = lr_backward(batch, grad_logits, self, self.prefix)
        dE = sum(cross_term_backward(E, r, grad_logits) for r in range(2, self.max_order + 1))
        grads.update(embed_backward(batch, dE, self.params, self.schema, self.prefix))
        return grads


class FM(HOFM):
    kind = "fm"
    prefix = "fm."

    @property
    def max_order(self) -> int:
        return 2

    def __init__(self, schema, config=None, seed=0):
        Model.__init__(self, schema, config, seed)


class DNN(Model):
    """MLP over the concatenation of ordinary (unclamped) field embeddings."""

    kind = "dnn"
    prefix = "dnn."

    def init_params(self, rng):
        c = self.config
        self.params.update(init_tables(self.schema, c.embed_dim, rng, c.init_scale, self.prefix))
        self.stack = DeepStack(self, self.m * c.embed_dim, self.prefix)
        self.stack.init(rng)

    @property
    def uses_batch_stats(self) -> bool:
        return self.config.bn and len(self.config.hidden) > 0

    def forward(self, batch, mode=INFER):
        E = embed(batch, self.params, self.schema, self.prefix)
        logits, stack_cache = self.stack.forward(E.reshape(E.shape[0], -1), mode)
        return logits, {"batch": batch, "E": E, "stack": stack_cache}

    def backward(self, cache, grad_logits):
        grads = {}
        dz0 = self.stack.backward(grad_logits, cache["stack"], grads)
        grads.update(embed_backward(cache["batch"], dz0.reshape(cache["E"].shape), self.params,
                                    self.schema, self.prefix))
        return grads

    def commit_stats(self, cache):
        self.stack.commit(cache["stack"])


def dnn_forward(model: DNN, batch: Batch, mode: str = INFER) -> np.ndarray:
    return model.forward(batch, mode)[0]
