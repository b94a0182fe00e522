"""Common scaffolding for every model class: config, parameter storage, loss."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .data import Batch, FieldSchema
from .metrics import logloss


@dataclass
class ModelConfig:
    embed_dim: int = 8
    log_neurons: int = 32
    hidden: tuple = (32, 32)
    bn: bool = True
    # where the first AFN normalization sits: after ln ("ln") or after the weighted sum ("sum")
    ln_bn_site: str = "ln"
    max_order: int = 3
    clamp_eps: float = 1e-7
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5
    init_scale: float = 1.0
    exp_clip: float = 30.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.embed_dim < 1 or self.log_neurons < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("embed_dim, log_neurons and hidden widths must be positive")
        if self.ln_bn_site not in ("ln", "sum"):
            raise ValueError(f"ln_bn_site must be 'ln' or 'sum', got {self.ln_bn_site!r}")
        if not 0.0 < self.bn_momentum < 1.0:
            raise ValueError("bn_momentum must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def logloss_grad(labels: np.ndarray, logits: np.ndarray) -> np.ndarray:
    """Derivative of the mean log loss w.r.t. each logit."""
    return (sigmoid(logits) - labels) / len(labels)


class Model:
    """Base class holding trainable ``params`` and non-trainable ``buffers``.

    Subclasses implement ``forward(batch, mode) -> (logits, cache)`` and
    ``backward(cache, grad_logits) -> {name: grad}``. ``mode`` is ``"train"``
    (batch statistics in normalization layers) or ``"infer"``. Forward passes
    never mutate state; ``commit_stats`` applies running-statistic updates.
    """

    kind = "base"
    prefix = ""

    def __init__(self, schema: list[FieldSchema], config: ModelConfig | None = None, seed: int = 0):
        self.schema = list(schema)
        self.config = config or ModelConfig()
        self.seed = seed
        self.params: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self.init_params(np.random.default_rng(seed))

    @property
    def m(self) -> int:
        return len(self.schema)

    def init_params(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def forward(self, batch: Batch, mode: str = "infer"):
        raise NotImplementedError

    def backward(self, cache, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def commit_stats(self, cache) -> None:
        """Fold batch statistics from a train-mode forward into running buffers."""

    @property
    def uses_batch_stats(self) -> bool:
        return False

    def predict_logits(self, batch: Batch) -> np.ndarray:
        return self.forward(batch, "infer")[0]

    def loss_and_grads(self, batch: Batch, mode: str = "train"):
        logits, cache = self.forward(batch, mode)
        loss = logloss(batch.labels, logits)
        grads = self.backward(cache, logloss_grad(batch.labels, logits))
        return loss, grads, cache

    def state(self) -> dict[str, np.ndarray]:
        return {**self.params, **self.buffers}

    def copy_state(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.state().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for k, v in state.items():
            target = self.params if k in self.params else self.buffers
            if k not in target:
                raise KeyError(f"unknown parameter {k!r} for model {self.kind}")
            if target[k].shape != np.shape(v):
                raise ValueError(f"shape mismatch for {k}: {target[k].shape} vs {np.shape(v)}")
            target[k][...] = v
