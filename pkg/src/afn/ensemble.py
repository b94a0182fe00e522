"""AFN+: an affine blend of a frozen AFN and a frozen DNN on the logit scale."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint
from .data import Dataset
from .metrics import auc, logloss
from .model import Model, logloss_grad
from .training import AdamState, Metrics, TrainConfig, adam_step, predict


@dataclass
class EnsembleParams:
    w1: float = 0.5
    w2: float = 0.5
    b: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.w1, self.w2, self.b])):
            raise ValueError("ensemble parameters must be finite")


def ensemble_logit(afn_logit, dnn_logit, params: EnsembleParams):
    return params.w1 * np.asarray(afn_logit) + params.w2 * np.asarray(dnn_logit) + params.b


def _as_model(m) -> Model:
    return m if isinstance(m, Model) else load_checkpoint(m)


def check_compatible(afn: Model, dnn: Model) -> None:
    if [f.to_dict() for f in afn.schema] != [f.to_dict() for f in dnn.schema]:
        raise ValueError("sub-model checkpoints were fitted on different schemas")
    shared = {n for n in afn.params if "embed." in n} & {n for n in dnn.params if "embed." in n}
    if shared:
        raise ValueError(f"sub-models share embedding tables: {sorted(shared)}")


@dataclass
class EnsembleReport:
    afn_val_logloss: float
    dnn_val_logloss: float
    val_logloss: float
    val_auc: float


def train_ensemble(afn, dnn, train_set: Dataset, val_set: Dataset, cfg: TrainConfig | None = None,
                   steps: int = 2000, learning_rate: float = 0.01, eval_every: int = 50):
    """Fit ``(w1, w2, b)`` by full-batch Adam on the training logits of both frozen models.

    The returned blend is the candidate with the lowest validation log loss
    among the Adam iterates (checked every ``eval_every`` steps) and the two
    single-model blends ``(1, 0, 0)`` and ``(0, 1, 0)``. Sub-model parameters
    are only read.
    """
    afn, dnn = _as_model(afn), _as_model(dnn)
    check_compatible(afn, dnn)
    cfg = TrainConfig(**{**asdict(cfg or TrainConfig()), "learning_rate": learning_rate})
    tr = np.stack([predict(afn, train_set), predict(dnn, train_set)], axis=1)
    va = np.stack([predict(afn, val_set), predict(dnn, val_set)], axis=1)
    y_tr, y_va = train_set.labels, val_set.labels

    def val_loss(p):
        return logloss(y_va, ensemble_logit(va[:, 0], va[:, 1], p))

    theta = {"w": np.array([0.5, 0.5]), "b": np.zeros(1)}
    state = AdamState()
    candidates = []
    for step in range(steps + 1):
        if step % eval_every == 0 or step == steps:
            candidates.append(EnsembleParams(float(theta["w"][0]), float(theta["w"][1]), float(theta["b"][0])))
        if step == steps:
            break
        g = logloss_grad(y_tr, tr @ theta["w"] + theta["b"][0])
        adam_step(theta, {"w": tr.T @ g, "b": np.array([g.sum()])}, state, cfg)
    afn_only, dnn_only = EnsembleParams(1.0, 0.0, 0.0), EnsembleParams(0.0, 1.0, 0.0)
    candidates += [afn_only, dnn_only]
    losses = [val_loss(p) for p in candidates]
    best = candidates[int(np.argmin(losses))]
    blended = ensemble_logit(va[:, 0], va[:, 1], best)
    report = EnsembleReport(val_loss(afn_only), val_loss(dnn_only), min(losses), auc(y_va, blended))
    return best, report


def save_ensemble(path, params: EnsembleParams, afn_ckpt, dnn_ckpt) -> None:
    doc = {**asdict(params), "afn_ckpt": str(afn_ckpt), "dnn_ckpt": str(dnn_ckpt)}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def is_ensemble_document(doc: dict) -> bool:
    return {"w1", "w2", "b", "afn_ckpt", "dnn_ckpt"} <= set(doc)


def load_ensemble(path, doc: dict | None = None):
    """Returns ``(params, afn_model, dnn_model)``; relative sub-paths resolve against ``path``."""
    if doc is None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    base = Path(path).parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() or p.exists() else base / p

    params = EnsembleParams(doc["w1"], doc["w2"], doc["b"])
    return params, load_checkpoint(resolve(doc["afn_ckpt"])), load_checkpoint(resolve(doc["dnn_ckpt"]))


def evaluate_ensemble(params: EnsembleParams, afn: Model, dnn: Model, dataset: Dataset) -> Metrics:
    z = ensemble_logit(predict(afn, dataset), predict(dnn, dataset), params)
    return Metrics(auc(dataset.labels, z), logloss(dataset.labels, z))
