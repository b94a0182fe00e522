import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afn.data import (
    DataError,
    Dataset,
    Instance,
    batch_iter,
    fit_schema,
    load_dataset,
    split,
)

BRANDS = "label\tbrand:C\tage:N\n1\ta\t2.5\n0\tb\t30\n1\ta\t-1\n"


def test_fit_schema_counts_distinct_tokens(write_tsv):
    schema = fit_schema(write_tsv(BRANDS))
    assert len(schema) == 2
    brand, age = schema
    assert brand.cardinality == 3  # OOV + a + b
    assert brand.vocab == ("a", "b")
    assert age.kind == "N"


def test_fit_schema_header_only(write_tsv):
    schema = fit_schema(write_tsv("label\tbrand:C\tcity:C\tage:N\n"))
    assert [f.cardinality for f in schema if f.is_categorical] == [1, 1]


@pytest.mark.parametrize("text, message", [
    ("label\tbrand:X\n", "unknown field kind"),
    ("lbl\tbrand:C\n", "malformed header"),
    ("label\tbrand\n", "malformed header"),
    ("label\tbrand:C\tage:N\n1\ta\n", "expected 3 columns"),
    ("label\tbrand:C\tage:N\n1\ta\tabc\n", "unparseable numeric"),
])
def test_fit_schema_errors(write_tsv, text, message):
    with pytest.raises(DataError, match=message):
        fit_schema(write_tsv(text))


def test_load_dataset_lookup_and_oov(write_tsv):
    schema = fit_schema(write_tsv(BRANDS))
    ds = load_dataset(write_tsv("label\tbrand:C\tage:N\n1\ta\t2.5\n0\tz\t1\n", "other.tsv"), schema)
    assert ds[0] == Instance(1, (schema[0].index_of("a"), 2.5))
    assert ds[0].values[0] == 1
    assert ds[1].values[0] == 0  # unseen token -> OOV


@pytest.mark.parametrize("row, message", [
    ("2\ta\t2.5", "label must be 0 or 1"),
    ("1\ta\tnan", "non-finite"),
    ("1\ta\tinf", "non-finite"),
])
def test_load_dataset_errors(write_tsv, row, message):
    schema = fit_schema(write_tsv(BRANDS))
    with pytest.raises(DataError, match=message):
        load_dataset(write_tsv(f"label\tbrand:C\tage:N\n{row}\n", "bad.tsv"), schema)


def test_load_dataset_rejects_foreign_header(write_tsv):
    schema = fit_schema(write_tsv(BRANDS))
    with pytest.raises(DataError, match="does not match"):
        load_dataset(write_tsv("label\tcolor:C\tage:N\n1\ta\t1\n", "x.tsv"), schema)


def test_round_trip_has_no_oov(write_tsv):
    path = write_tsv(BRANDS)
    schema = fit_schema(path)
    ds = load_dataset(path, schema)
    assert (ds.idx[:, 0] >= 1).all()


def _dataset(k):
    from afn.data import CATEGORICAL, FieldSchema

    schema = [FieldSchema(0, "f", CATEGORICAL, k + 1, tuple(str(i) for i in range(k)))]
    return Dataset(schema, np.arange(k) % 2, np.arange(1, k + 1).reshape(-1, 1), np.ones((k, 1)))


@pytest.mark.parametrize("k, sizes", [(10, (8, 1, 1)), (7, (5, 0, 2)), (100, (80, 10, 10))])
def test_split_sizes(k, sizes):
    parts = split(_dataset(k), (0.8, 0.1, 0.1), seed=3)
    assert tuple(len(p) for p in parts) == sizes


def test_split_floor_is_robust_to_representation_error():
    parts = split(_dataset(100), (0.29, 0.71, 0.0), seed=0)
    assert tuple(len(p) for p in parts) == (29, 71, 0)


def test_split_deterministic_and_validates():
    ds = _dataset(50)
    a = split(ds, (0.6, 0.2, 0.2), seed=9)
    b = split(ds, (0.6, 0.2, 0.2), seed=9)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.idx, y.idx)
    with pytest.raises(ValueError):
        split(ds, (0.5, 0.2, 0.2), seed=0)


@settings(max_examples=50, deadline=None)
@given(k=st.integers(1, 200), seed=st.integers(0, 2**32 - 1),
       r=st.tuples(st.integers(0, 10), st.integers(0, 10), st.integers(0, 10)).filter(lambda t: sum(t) > 0))
def test_split_is_partition(k, seed, r):
    ratios = tuple(x / sum(r) for x in r)
    ratios = (ratios[0], ratios[1], 1.0 - ratios[0] - ratios[1])
    ds = _dataset(k)
    parts = split(ds, ratios, seed)
    ids = np.concatenate([p.idx[:, 0] for p in parts])
    assert sorted(ids) == list(range(1, k + 1))


def test_batch_iter_sizes_and_order():
    ds = _dataset(10)
    batches = list(batch_iter(ds, 4))
    assert [len(b) for b in batches] == [4, 4, 2]
    np.testing.assert_array_equal(np.concatenate([b.idx[:, 0] for b in batches]), np.arange(1, 11))


def test_batch_iter_shuffle_deterministic_per_epoch():
    ds = _dataset(30)
    a = [b.idx[:, 0] for b in batch_iter(ds, 7, shuffle=True, seed=1, epoch=2)]
    b = [b.idx[:, 0] for b in batch_iter(ds, 7, shuffle=True, seed=1, epoch=2)]
    c = [b.idx[:, 0] for b in batch_iter(ds, 7, shuffle=True, seed=1, epoch=3)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not all(np.array_equal(x, y) for x, y in zip(a, c))
    assert sorted(np.concatenate(a)) == list(range(1, 31))


def test_dataset_rejects_out_of_range_category():
    from afn.data import CATEGORICAL, FieldSchema

    schema = [FieldSchema(0, "f", CATEGORICAL, 2, ("a",))]
    with pytest.raises(DataError):
        Dataset(schema, [1], [[2]], [[1.0]])
