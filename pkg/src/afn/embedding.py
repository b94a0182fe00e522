"""Per-field embedding lookup and the positivity clamp in front of the log layer."""

from __future__ import annotations

import numpy as np

from .data import Batch, FieldSchema

DEFAULT_EPS = 1e-7


def table_name(f: FieldSchema, prefix: str = "") -> str:
    kind = "cat" if f.is_categorical else "num"
    return f"{prefix}embed.{kind}.{f.field_id}"


def init_tables(schema: list[FieldSchema], k: int, rng: np.random.Generator,
                scale: float = 1.0, prefix: str = "") -> dict[str, np.ndarray]:
    """Uniform(-0.01*scale, 0.01*scale) tables: ``[cardinality, k]`` or ``[k]``."""
    bound = 0.01 * scale
    tables = {}
    for f in schema:
        shape = (f.cardinality, k) if f.is_categorical else (k,)
        tables[table_name(f, prefix)] = rng.uniform(-bound, bound, size=shape)
    return tables


def embed(batch: Batch, tables: dict[str, np.ndarray], schema: list[FieldSchema],
          prefix: str = "") -> np.ndarray:
    """Return the ``[K, m, k]`` field embeddings of a batch.

    Categorical rows are ``V_i[index]``; numerical rows are ``v_j * x_j``.
    """
    cols = []
    for f in schema:
        t = tables[table_name(f, prefix)]
        if f.is_categorical:
            rows = batch.idx[:, f.field_id]
            if rows.size and (rows.min() < 0 or rows.max() >= t.shape[0]):
                raise IndexError(f"category index out of range for field {f.name!r}")
            cols.append(t[rows])
        else:
            cols.append(batch.val[:, f.field_id, None] * t[None, :])
    return np.stack(cols, axis=1)


def positive_clamp(E: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    return np.maximum(np.abs(E), eps)


def positive_clamp_backward(E: np.ndarray, grad: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    # subgradient: sign(E) outside the floor, zero where the floor is active
    return grad * np.sign(E) * (np.abs(E) > eps)


def embed_backward(batch: Batch, grad_E: np.ndarray, tables: dict[str, np.ndarray],
                   schema: list[FieldSchema], prefix: str = "", clamped_from: np.ndarray | None = None,
                   eps: float = DEFAULT_EPS) -> dict[str, np.ndarray]:
    """Scatter ``grad_E`` (``[K, m, k]``) onto the tables.

    If ``clamped_from`` holds the raw embeddings, ``grad_E`` is taken w.r.t. the
    clamped ones and is first pulled back through ``positive_clamp``. Only
    looked-up rows of categorical tables receive gradient.
    """
    if clamped_from is not None:
        grad_E = positive_clamp_backward(clamped_from, grad_E, eps)
    grads = {}
    for f in schema:
        name = table_name(f, prefix)
        g = grad_E[:, f.field_id, :]
        if f.is_categorical:
            acc = np.zeros_like(tables[name])
            np.add.at(acc, batch.idx[:, f.field_id], g)
        else:
            acc = batch.val[:, f.field_id] @ g
        grads[name] = acc
    return grads
