"""Inspection of learned log-neuron powers across training snapshots."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .checkpoint import decode_array, read_document
from .logtransform import LtlParams, cross_feature_orders


def _snapshot(item):
    """Normalize ``(step, W)`` pairs and checkpoint documents to ``(step, W)``."""
    if isinstance(item, dict):
        return int(item.get("step", 0)), decode_array(item["params"]["ltl.W"])
    step, W = item
    return int(step), np.asarray(W, dtype=np.float64)


def snapshot_orders(snapshots):
    """Per-snapshot cross-feature orders and raw powers.

    Returns ``(orders, weights)`` with rows ``(step, neuron_id, order)`` and
    ``(step, field_id, neuron_id, w)``.
    """
    orders, weights = [], []
    shape = None
    for item in snapshots:
        step, W = _snapshot(item)
        if shape is None:
            shape = W.shape
        elif W.shape != shape:
            raise ValueError(f"snapshot at step {step} has W of shape {W.shape}, expected {shape}")
        for j, order in enumerate(cross_feature_orders(LtlParams(W))):
            orders.append((step, j, float(order)))
        m, n = W.shape
        for i in range(m):
            for j in range(n):
                weights.append((step, i, j, float(W[i, j])))
    return orders, weights


def case_study(W, field_names, top_k: int | None = None):
    """Fields ranked by ``|w_ij|`` within each neuron, plus per-field totals over neurons.

    Ties in ``|w_ij|`` go to the lower field id. Returns ``(ranked, sums)`` with
    rows ``(neuron_id, rank, field_name, abs_weight)`` and ``(field_name, total)``.
    """
    A = np.abs(np.asarray(W, dtype=np.float64))
    m, n = A.shape
    if len(field_names) != m:
        raise ValueError(f"{len(field_names)} field names for {m} fields")
    ranked = []
    for j in range(n):
        order = sorted(range(m), key=lambda i: (-A[i, j], i))
        for rank, i in enumerate(order[:top_k] if top_k else order, start=1):
            ranked.append((j, rank, field_names[i], float(A[i, j])))
    sums = [(field_names[i], float(A[i].sum())) for i in range(m)]
    return ranked, sums


def top_fields(W, count: int) -> list[int]:
    """Field ids with the largest total ``sum_j |w_ij|``, ties to the lower id."""
    totals = np.abs(np.asarray(W)).sum(axis=1)
    return sorted(range(len(totals)), key=lambda i: (-totals[i], i))[:count]


def _write(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def write_analysis(out_dir, orders, weights, ranked, sums) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "orders": out / "orders.csv",
        "weights": out / "weights.csv",
        "case_study": out / "case_study.csv",
        "field_sums": out / "field_sums.csv",
    }
    _write(paths["orders"], ["step", "neuron_id", "order"], orders)
    _write(paths["weights"], ["step", "field_id", "neuron_id", "w"], weights)
    _write(paths["case_study"], ["neuron_id", "rank", "field_name", "abs_weight"], ranked)
    _write(paths["field_sums"], ["field_name", "total_abs_weight"], sums)
    return paths


def inspect_checkpoints(paths, out_dir, top_k: int | None = None, case_path=None) -> dict:
    """Write the four analysis CSVs for a set of AFN snapshot checkpoints.

    Snapshots are ordered by their recorded step. The case study uses
    ``case_path`` when given, else the latest snapshot.
    """
    docs = sorted((read_document(p) for p in paths), key=lambda d: d.get("step", 0))
    if not docs:
        raise FileNotFoundError("no snapshot checkpoints matched")
    for d in docs:
        if "ltl.W" not in d["params"]:
            raise ValueError(f"checkpoint of model {d.get('model')!r} has no log-neuron layer")
    orders, weights = snapshot_orders(docs)
    case_doc = read_document(case_path) if case_path else docs[-1]
    names = [f["name"] for f in case_doc["schema"]]
    ranked, sums = case_study(decode_array(case_doc["params"]["ltl.W"]), names, top_k)
    return write_analysis(out_dir, orders, weights, ranked, sums)
