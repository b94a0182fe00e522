"""Field schemas, TSV dataset parsing, splitting and batching.

Files are UTF-8, TAB-separated, with a typed header::

    label<TAB>brand:C<TAB>age:N
    1<TAB>acme<TAB>31.5

Categorical vocabularies reserve index 0 for tokens never seen while fitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

CATEGORICAL = "C"
NUMERICAL = "N"
OOV = 0


class DataError(ValueError):
    """Raised for malformed dataset files or values."""


@dataclass(frozen=True)
class FieldSchema:
    field_id: int
    name: str
    kind: str
    cardinality: int = 1
    vocab: tuple[str, ...] = ()

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    def index_of(self, token: str) -> int:
        # vocab is sorted, so bisect would work; a dict is built lazily instead
        lookup = self.__dict__.get("_lookup")
        if lookup is None:
            lookup = {tok: i + 1 for i, tok in enumerate(self.vocab)}
            object.__setattr__(self, "_lookup", lookup)
        return lookup.get(token, OOV)

    def to_dict(self) -> dict:
        out = {"field_id": self.field_id, "name": self.name, "kind": self.kind}
        if self.is_categorical:
            out["cardinality"] = self.cardinality
            out["vocab"] = list(self.vocab)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "FieldSchema":
        if d["kind"] == CATEGORICAL:
            return cls(d["field_id"], d["name"], CATEGORICAL, d["cardinality"], tuple(d["vocab"]))
        return cls(d["field_id"], d["name"], NUMERICAL)


@dataclass(frozen=True)
class Instance:
    label: int
    values: tuple


@dataclass
class Dataset:
    """Columnar storage of labeled instances.

    ``idx[r, i]`` is the category index of field ``i`` (0 for numerical fields)
    and ``val[r, i]`` its multiplier: 1.0 for categorical fields, the raw
    scalar for numerical ones. Embedding lookups become ``table[idx] * val``.
    """

    schema: list[FieldSchema]
    labels: np.ndarray
    idx: np.ndarray
    val: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        self.idx = np.asarray(self.idx, dtype=np.int64).reshape(len(self.labels), len(self.schema))
        self.val = np.asarray(self.val, dtype=np.float64).reshape(self.idx.shape)
        for f in self.schema:
            col = self.idx[:, f.field_id]
            if f.is_categorical and col.size and (col.min() < 0 or col.max() >= f.cardinality):
                raise DataError(f"category index out of range for field {f.name!r}")
        if not np.all(np.isfinite(self.val)):
            raise DataError("numerical values must be finite")

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, r: int) -> Instance:
        values = tuple(
            int(self.idx[r, f.field_id]) if f.is_categorical else float(self.val[r, f.field_id])
            for f in self.schema
        )
        return Instance(int(self.labels[r]), values)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.schema, self.labels[rows], self.idx[rows], self.val[rows])

    @classmethod
    def from_instances(cls, schema: list[FieldSchema], instances: Sequence[Instance]) -> "Dataset":
        m = len(schema)
        idx = np.zeros((len(instances), m), dtype=np.int64)
        val = np.ones((len(instances), m))
        labels = np.empty(len(instances))
        for r, inst in enumerate(instances):
            if len(inst.values) != m:
                raise DataError(f"instance has {len(inst.values)} values, schema has {m} fields")
            labels[r] = inst.label
            for f, v in zip(schema, inst.values):
                if f.is_categorical:
                    idx[r, f.field_id] = v
                else:
                    val[r, f.field_id] = v
        return cls(schema, labels, idx, val)


def _read_header(line: str) -> list[tuple[str, str]]:
    tokens = line.rstrip("\n").split("\t")
    if not tokens or tokens[0] != "label":
        raise DataError("malformed header: first column must be 'label'")
    cols = []
    for tok in tokens[1:]:
        name, sep, kind = tok.rpartition(":")
        if not sep or not name:
            raise DataError(f"malformed header token {tok!r}, expected name:kind")
        if kind not in (CATEGORICAL, NUMERICAL):
            raise DataError(f"unknown field kind {kind!r} in header token {tok!r}")
        cols.append((name, kind))
    names = [c[0] for c in cols]
    if len(set(names)) != len(names):
        raise DataError("duplicate field names in header")
    return cols


def _rows(fh, width: int) -> Iterator[tuple[int, list[str]]]:
    for lineno, line in enumerate(fh, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        tokens = line.split("\t")
        if len(tokens) != width:
            raise DataError(f"line {lineno}: expected {width} columns, got {len(tokens)}")
        yield lineno, tokens


def _parse_number(tok: str, lineno: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise DataError(f"line {lineno}: unparseable numeric token {tok!r}") from None
    if not math.isfinite(x):
        raise DataError(f"line {lineno}: non-finite numeric value {tok!r}")
    return x


def fit_schema(path) -> list[FieldSchema]:
    """Build a schema with categorical vocabularies from the tokens in ``path``."""
    with open(path, encoding="utf-8") as fh:
        cols = _read_header(fh.readline())
        seen: list[set[str]] = [set() for _ in cols]
        for lineno, tokens in _rows(fh, len(cols) + 1):
            for i, (name, kind) in enumerate(cols):
                tok = tokens[i + 1]
                if kind == CATEGORICAL:
                    seen[i].add(tok)
                else:
                    _parse_number(tok, lineno)
    schema = []
    for i, (name, kind) in enumerate(cols):
        if kind == CATEGORICAL:
            vocab = tuple(sorted(seen[i]))
            schema.append(FieldSchema(i, name, kind, 1 + len(vocab), vocab))
        else:
            schema.append(FieldSchema(i, name, kind))
    return schema


def _parse_label(tok: str, lineno: int) -> int:
    if tok in ("0", "1"):
        return int(tok)
    raise DataError(f"line {lineno}: label must be 0 or 1, got {tok!r}")


def load_dataset(path, schema: list[FieldSchema]) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        cols = _read_header(fh.readline())
        if cols != [(f.name, f.kind) for f in schema]:
            raise DataError(f"header of {path} does not match the schema")
        labels, idx, val = [], [], []
        for lineno, tokens in _rows(fh, len(schema) + 1):
            labels.append(_parse_label(tokens[0], lineno))
            row_idx = [0] * len(schema)
            row_val = [1.0] * len(schema)
            for f in schema:
                tok = tokens[f.field_id + 1]
                if f.is_categorical:
                    row_idx[f.field_id] = f.index_of(tok)
                else:
                    row_val[f.field_id] = _parse_number(tok, lineno)
            idx.append(row_idx)
            val.append(row_val)
    m = len(schema)
    return Dataset(
        schema,
        np.array(labels, dtype=np.float64),
        np.array(idx, dtype=np.int64).reshape(-1, m),
        np.array(val, dtype=np.float64).reshape(-1, m),
    )


def write_tsv(path, schema: list[FieldSchema], labels, tokens) -> None:
    """Write rows of string tokens (one list per instance) under a typed header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(["label"] + [f"{f.name}:{f.kind}" for f in schema]) + "\n")
        for y, row in zip(labels, tokens):
            fh.write("\t".join([str(int(y))] + [str(t) for t in row]) + "\n")


def split(dataset: Dataset, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Deterministic train/val/test partition; sizes are floored, test takes the remainder."""
    if len(dataset) == 0:
        raise DataError("cannot split an empty dataset")
    if len(ratios) != 3 or min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three nonnegative reals summing to 1, got {ratios}")
    k = len(dataset)
    perm = np.random.default_rng(seed).permutation(k)
    # tolerance guards products like 0.29 * 100 = 28.999999999999996
    n_train = int(math.floor(k * ratios[0] + 1e-9))
    n_val = int(math.floor(k * ratios[1] + 1e-9))
    return (
        dataset.subset(perm[:n_train]),
        dataset.subset(perm[n_train:n_train + n_val]),
        dataset.subset(perm[n_train + n_val:]),
    )


@dataclass
class Batch:
    labels: np.ndarray
    idx: np.ndarray
    val: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


def as_batch(data) -> Batch:
    """Accept a Dataset, a Batch, or a single Instance (with its schema attached via Dataset)."""
    if isinstance(data, Batch):
        return data
    return Batch(data.labels, data.idx, data.val)


def batch_iter(dataset: Dataset, batch_size: int, shuffle: bool = False, seed: int = 0,
               epoch: int = 0) -> Iterator[Batch]:
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    k = len(dataset)
    order = np.random.default_rng([seed, epoch]).permutation(k) if shuffle else np.arange(k)
    for start in range(0, k, batch_size):
        rows = order[start:start + batch_size]
        yield Batch(dataset.labels[rows], dataset.idx[rows], dataset.val[rows])
