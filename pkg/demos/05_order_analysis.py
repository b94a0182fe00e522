#!/usr/bin/env python3
# Watch the learned cross-feature orders move during training, from the snapshots a
# CLI run writes. Everything lands in a temporary directory.

import csv
import tempfile
from pathlib import Path

from afn.cli import main

tmp = Path(tempfile.mkdtemp(prefix="afn-orders-"))
main(["gen-synth", "--out", str(tmp / "train.tsv"), "--n", "8000", "--seed", "1"])
main(["gen-synth", "--out", str(tmp / "val.tsv"), "--n", "2000", "--seed", "2"])
main(["train", "--model", "afn", "--data", str(tmp / "train.tsv"), "--val", str(tmp / "val.tsv"),
      "--out", str(tmp / "run"), "--log-neurons", "8", "--batch", "256", "--epochs", "6"])
main(["inspect-orders", "--ckpt-glob", str(tmp / "run" / "snapshots" / "snap_*.json"),
      "--out", str(tmp / "tables"), "--top-k", "3"])

# mean cross order per snapshot
by_step = {}
with open(tmp / "tables" / "orders.csv") as fh:
    for row in csv.DictReader(fh):
        by_step.setdefault(int(row["step"]), []).append(float(row["order"]))
for step, orders in sorted(by_step.items()):
    print("step %5d  mean order %.3f  max %.3f" % (step, sum(orders) / len(orders), max(orders)))

# fields ranked by total |w| in the last snapshot; the planted ones should lead
with open(tmp / "tables" / "field_sums.csv") as fh:
    sums = sorted(csv.DictReader(fh), key=lambda r: -float(r["total_abs_weight"]))
print("field order mass:", ", ".join("%s=%.2f" % (r["field_name"], float(r["total_abs_weight"])) for r in sums))
print("tables written to", tmp / "tables")
