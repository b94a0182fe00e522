"""Adam, the early-stopped training loop, evaluation and gradient checking."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Batch, Dataset, batch_iter
from .metrics import auc, logloss
from .model import Model

__all__ = [
    "AdamState", "Metrics", "NumericError", "TrainConfig", "TrainResult", "adam_step", "auc",
    "evaluate", "grad_check", "logloss", "predict", "train", "write_metrics_log",
]

log = logging.getLogger(__name__)


class NumericError(ArithmeticError):
    """Loss or gradients became NaN/Inf."""


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 4096
    max_epochs: int = 20
    patience: int = 3
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1 or self.patience < 0:
            raise ValueError("learning_rate, batch_size and max_epochs must be positive, patience >= 0")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(params: dict, grads: dict, state: AdamState, cfg: TrainConfig):
    """One bias-corrected Adam update, applied to ``params`` in place."""
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    state.t += 1
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            raise ValueError(f"no gradient for parameter {name!r}")
        if np.shape(g) != p.shape:
            raise ValueError(f"gradient shape {np.shape(g)} does not match {name} {p.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)
    return params, state


@dataclass
class Metrics:
    auc: float
    logloss: float


@dataclass
class EpochRecord:
    epoch: int
    train_logloss: float
    val_auc: float
    val_logloss: float


@dataclass
class TrainResult:
    model: Model
    log: list
    best_epoch: int
    best_auc: float
    steps: int


def _num_threads() -> int:
    try:
        return max(1, int(os.environ.get("AFN_NUM_THREADS", "1")))
    except ValueError:
        return 1


def predict(model: Model, dataset: Dataset, chunk: int = 8192) -> np.ndarray:
    """Infer-mode logits; chunks may run on ``AFN_NUM_THREADS`` threads, results keep order."""
    chunks = list(batch_iter(dataset, chunk))
    if not chunks:
        return np.zeros(0)
    threads = min(_num_threads(), len(chunks))
    if threads == 1:
        return np.concatenate([model.predict_logits(b) for b in chunks])
    with ThreadPoolExecutor(threads) as pool:
        return np.concatenate(list(pool.map(model.predict_logits, chunks)))


def evaluate(model: Model, dataset: Dataset) -> Metrics:
    logits = predict(model, dataset)
    return Metrics(auc(dataset.labels, logits), logloss(dataset.labels, logits))


def _check_finite(loss: float, where: str) -> None:
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss {loss} at {where}")


def train(model: Model, train_set: Dataset, val_set: Dataset, cfg: TrainConfig,
          on_step=None, on_epoch=None) -> TrainResult:
    """Mini-batch Adam with validation-AUC early stopping.

    After each epoch the validation AUC is computed in infer mode. The model
    ends up holding the parameters of its best epoch. Training stops once more
    than ``cfg.patience`` consecutive epochs fail to improve on the best AUC.
    ``on_step(model, step, epoch)`` runs after every optimizer step and
    ``on_epoch(model, record, step)`` after every validation pass.
    """
    if len(val_set) == 0 or len(np.unique(val_set.labels)) < 2:
        raise ValueError("validation set must contain both classes")
    state = AdamState()
    best_auc, best_epoch, best_state = -np.inf, 0, model.copy_state()
    stale = 0
    records = []
    step = 0
    for epoch in range(1, cfg.max_epochs + 1):
        loss_sum, seen = 0.0, 0
        for batch in batch_iter(train_set, cfg.batch_size, shuffle=True, seed=cfg.seed, epoch=epoch):
            if len(batch) < 2 and model.uses_batch_stats:
                continue
            loss, grads, cache = model.loss_and_grads(batch, "train")
            _check_finite(loss, f"epoch {epoch}, step {step + 1}")
            adam_step(model.params, grads, state, cfg)
            model.commit_stats(cache)
            step += 1
            loss_sum += loss * len(batch)
            seen += len(batch)
            if on_step is not None:
                on_step(model, step, epoch)
        val = evaluate(model, val_set)
        _check_finite(val.logloss, f"validation after epoch {epoch}")
        rec = EpochRecord(epoch, loss_sum / max(seen, 1), val.auc, val.logloss)
        records.append(rec)
        log.info("epoch %d train_logloss=%.6f val_auc=%.6f val_logloss=%.6f",
                 epoch, rec.train_logloss, rec.val_auc, rec.val_logloss)
        if on_epoch is not None:
            on_epoch(model, rec, step)
        if val.auc > best_auc:
            best_auc, best_epoch, best_state = val.auc, epoch, model.copy_state()
            stale = 0
        else:
            stale += 1
            if stale > cfg.patience:
                break
    model.load_state(best_state)
    return TrainResult(model, records, best_epoch, float(best_auc), step)


def write_metrics_log(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_logloss", "val_auc", "val_logloss"])
        for r in records:
            w.writerow([r.epoch, repr(r.train_logloss), repr(r.val_auc), repr(r.val_logloss)])


@dataclass
class GradCheckResult:
    max_rel_error: float
    per_param: dict

    def __float__(self):
        return self.max_rel_error


def grad_check(model: Model, batch: Batch, h: float = 1e-5, analytic: dict | None = None,
               max_coords: int | None = None, seed: int = 0, floor: float = 1e-6) -> GradCheckResult:
    """Compare analytic gradients of the mean log loss with central differences.

    Normalization layers run in train mode on the fixed ``batch`` and running
    statistics are left untouched. The error per coordinate is
    ``|a - n| / max(|a|, |n|, floor)``; ``floor`` keeps structurally-zero
    gradients from turning rounding noise into large ratios. With
    ``max_coords`` only that many coordinates per tensor are sampled.
    """
    if analytic is None:
        _, analytic, _ = model.loss_and_grads(batch, "train")
    rng = np.random.default_rng(seed)

    def loss_at():
        return logloss(batch.labels, model.forward(batch, "train")[0])

    per_param = {}
    for name, p in model.params.items():
        flat = p.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        a_flat = np.asarray(analytic[name]).reshape(-1)
        worst = 0.0
        for c in coords:
            orig = flat[c]
            flat[c] = orig + h
            up = loss_at()
            flat[c] = orig - h
            down = loss_at()
            flat[c] = orig
            num = (up - down) / (2.0 * h)
            a = a_flat[c]
            err = abs(a - num) / max(abs(a), abs(num), floor)
            worst = max(worst, err)
        per_param[name] = worst
    return GradCheckResult(max(per_param.values(), default=0.0), per_param)
