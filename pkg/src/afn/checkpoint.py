"""JSON checkpoints and the model-class registry.

Layout::

    {"model": "afn", "seed": 7, "step": 1200, "config": {...},
     "schema": [{"field_id": 0, "name": ..., "kind": "C", "cardinality": ..., "vocab": [...]}, ...],
     "params": {"ltl.W": {"shape": [m, N], "data": [row-major float64]}, ...}}

Serialization is canonical (sorted keys, ``repr`` floats), so identical models
give byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .baselines import DNN, FM, HOFM, LR
from .data import FieldSchema
from .model import Model, ModelConfig
from .network import AFN

MODEL_CLASSES = {cls.kind: cls for cls in (LR, FM, HOFM, DNN, AFN)}


def build_model(kind: str, schema: list[FieldSchema], config: ModelConfig | None = None,
                seed: int = 0) -> Model:
    try:
        cls = MODEL_CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown model {kind!r}; choose from {sorted(MODEL_CLASSES)}") from None
    return cls(schema, config or ModelConfig(), seed)


def encode_array(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": [float(x) for x in a.ravel()]}


def decode_array(d: dict) -> np.ndarray:
    return np.array(d["data"], dtype=np.float64).reshape(d["shape"])


def to_document(model: Model, **meta) -> dict:
    doc = {
        "model": model.kind,
        "seed": model.seed,
        "config": model.config.to_dict(),
        "schema": [f.to_dict() for f in model.schema],
        "params": {name: encode_array(a) for name, a in model.state().items()},
    }
    doc.update(meta)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def save_checkpoint(model: Model, path, **meta) -> None:
    Path(path).write_text(dumps(to_document(model, **meta)), encoding="utf-8")


def from_document(doc: dict) -> Model:
    schema = [FieldSchema.from_dict(d) for d in doc["schema"]]
    model = build_model(doc["model"], schema, ModelConfig.from_dict(doc["config"]), doc.get("seed", 0))
    state = {name: decode_array(d) for name, d in doc["params"].items()}
    missing = set(model.state()) - set(state)
    if missing:
        raise ValueError(f"checkpoint lacks parameters: {sorted(missing)}")
    model.load_state(state)
    return model


def read_document(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_checkpoint(path) -> Model:
    return from_document(read_document(path))


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
