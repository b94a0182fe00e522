import numpy as np
import pytest

from afn.data import CATEGORICAL, NUMERICAL, Batch, FieldSchema

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        # tests run in file order; print the criteria in numeric order
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def mixed_schema():
    return [
        FieldSchema(0, "brand", CATEGORICAL, 4, ("a", "b", "c")),
        FieldSchema(1, "age", NUMERICAL),
        FieldSchema(2, "city", CATEGORICAL, 3, ("x", "y")),
    ]


def random_batch(schema, n, rng):
    idx = np.zeros((n, len(schema)), dtype=np.int64)
    val = np.ones((n, len(schema)))
    for f in schema:
        if f.is_categorical:
            idx[:, f.field_id] = rng.integers(0, f.cardinality, n)
        else:
            val[:, f.field_id] = rng.normal(size=n)
    return Batch(rng.integers(0, 2, n).astype(np.float64), idx, val)


def categorical_schema(m, card=5):
    vocab = tuple(f"t{j}" for j in range(card - 1))
    return [FieldSchema(i, f"f{i}", CATEGORICAL, card, vocab) for i in range(m)]


@pytest.fixture
def write_tsv(tmp_path):
    def _write(text, name="data.tsv"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    return _write
