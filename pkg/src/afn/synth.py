"""Synthetic click data with a planted third-order interaction.

``cross3``: ``n_fields`` categorical fields with values ``v0..v{c-1}``. Three
planted fields each take their planted value with probability ``match_prob``
(otherwise a uniform other value); the remaining fields are uniform noise.
With ``c`` the number of planted fields matching, the label is Bernoulli with

    logit = base + boost * [c == 3] - decoy * c

Partial matches lower the click probability while the full conjunction raises
it sharply. No additive or pairwise score can order the four match counts the
way the true logit does, so only models that build third-order crosses can
approach the Bayes AUC.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CATEGORICAL, Dataset, FieldSchema, write_tsv
from .model import sigmoid

PATTERNS = ("cross3",)


@dataclass(frozen=True)
class PlantedCross:
    fields: tuple
    values: tuple
    base: float = 1.0
    boost: float = 8.0
    decoy: float = 1.0
    match_prob: float = 0.5

    def logit(self, values: np.ndarray) -> np.ndarray:
        """True logit for an ``[n, n_fields]`` array of value indices."""
        hits = np.stack([values[:, f] == v for f, v in zip(self.fields, self.values)], axis=1)
        count = hits.sum(axis=1)
        return self.base + self.boost * (count == len(self.fields)) - self.decoy * count


def synth_schema(n_fields: int = 8, cardinality: int = 10) -> list[FieldSchema]:
    vocab = tuple(sorted(f"v{j}" for j in range(cardinality)))
    return [FieldSchema(i, f"f{i}", CATEGORICAL, cardinality + 1, vocab) for i in range(n_fields)]


def plant(n_fields: int = 8, cardinality: int = 10, pattern_seed: int = 0) -> PlantedCross:
    if n_fields < 3 or cardinality < 2:
        raise ValueError("cross3 needs at least 3 fields and 2 values per field")
    rng = np.random.default_rng([pattern_seed, 0xC3])
    fields = tuple(int(f) for f in np.sort(rng.choice(n_fields, size=3, replace=False)))
    values = tuple(int(v) for v in rng.integers(0, cardinality, size=3))
    return PlantedCross(fields, values)


def generate(n: int, seed: int, pattern: str = "cross3", n_fields: int = 8, cardinality: int = 10,
             pattern_seed: int = 0):
    """Returns ``(labels [n], values [n, n_fields] ints, planted)``."""
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}; choose from {PATTERNS}")
    planted = plant(n_fields, cardinality, pattern_seed)
    rng = np.random.default_rng([seed, 0x5EED])
    values = rng.integers(0, cardinality, size=(n, n_fields))
    for f, v in zip(planted.fields, planted.values):
        hit = rng.random(n) < planted.match_prob
        # a non-match draws uniformly among the other cardinality-1 values
        other = rng.integers(0, cardinality - 1, size=n)
        other = other + (other >= v)
        values[:, f] = np.where(hit, v, other)
    labels = (rng.random(n) < sigmoid(planted.logit(values))).astype(np.int64)
    return labels, values, planted


def to_dataset(labels, values, cardinality: int = 10) -> Dataset:
    schema = synth_schema(values.shape[1], cardinality)
    # vocabulary is sorted lexicographically; index 0 stays the OOV slot
    lookup = {tok: i + 1 for i, tok in enumerate(schema[0].vocab)}
    remap = np.array([lookup[f"v{j}"] for j in range(cardinality)])
    return Dataset(schema, labels, remap[values], np.ones(values.shape))


def write_synth(path, n: int, seed: int, pattern: str = "cross3", n_fields: int = 8,
                cardinality: int = 10, pattern_seed: int = 0) -> PlantedCross:
    labels, values, planted = generate(n, seed, pattern, n_fields, cardinality, pattern_seed)
    tokens = [[f"v{x}" for x in row] for row in values]
    write_tsv(path, synth_schema(n_fields, cardinality), labels, tokens)
    return planted
