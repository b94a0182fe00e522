#!/usr/bin/env python3
# LR vs FM vs AFN on a synthetic task whose label depends on a three-field conjunction.
# usage: python demos/03_synthetic_benchmark.py [n_train] [seed]
# The default 10k rows takes well under a minute; the acceptance suite uses 50k and 3 seeds.

import sys
import time

from afn.analysis import top_fields
from afn.checkpoint import build_model
from afn.metrics import auc
from afn.model import ModelConfig
from afn.synth import generate, to_dataset
from afn.training import TrainConfig, evaluate, train

n = int(sys.argv[1]) if len(sys.argv) > 1 else 10000
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 1

tr = to_dataset(*generate(n, 100 + seed)[:2])
va = to_dataset(*generate(n // 10, 200 + seed)[:2])
labels, values, planted = generate(n // 10, 300 + seed)
te = to_dataset(labels, values)

print("planted fields", planted.fields, "values", planted.values)
print("positive rate %.3f" % labels.mean())
print("Bayes AUC on test (true logit) %.4f" % auc(labels, planted.logit(values)))

cfg = TrainConfig(learning_rate=0.001, batch_size=256, max_epochs=20, patience=3, seed=seed)
for kind in ("lr", "fm", "afn"):
    t = time.time()
    model = build_model(kind, tr.schema, ModelConfig(embed_dim=8, log_neurons=32, hidden=(32, 32)), seed)
    res = train(model, tr, va, cfg)
    m = evaluate(model, te)
    line = "%-3s test auc %.4f  logloss %.4f  best epoch %2d  (%.1fs)" % (
        kind, m.auc, m.logloss, res.best_epoch, time.time() - t)
    if kind == "afn":
        line += "  top-3 fields by order mass: %s" % sorted(top_fields(model.params["ltl.W"], 3))
    print(line)
