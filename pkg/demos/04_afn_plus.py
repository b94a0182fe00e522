#!/usr/bin/env python3
# AFN+ blends a trained AFN and a trained DNN on the logit scale:
#   z = w1 * z_afn + w2 * z_dnn + b
# Both sub-models stay frozen; only (w1, w2, b) are fitted.

from afn.baselines import DNN
from afn.ensemble import evaluate_ensemble, train_ensemble
from afn.model import ModelConfig
from afn.network import AFN
from afn.synth import generate, to_dataset
from afn.training import TrainConfig, evaluate, train

tr = to_dataset(*generate(8000, 1)[:2])
va = to_dataset(*generate(2000, 2)[:2])
cfg = TrainConfig(batch_size=256, max_epochs=8, patience=2)
mc = ModelConfig(embed_dim=8, log_neurons=16, hidden=(32, 32))

afn = train(AFN(tr.schema, mc, seed=0), tr, va, cfg).model
dnn = train(DNN(tr.schema, mc, seed=0), tr, va, cfg).model
params, report = train_ensemble(afn, dnn, tr, va)

print("AFN  val logloss %.5f  auc %.4f" % (report.afn_val_logloss, evaluate(afn, va).auc))
print("DNN  val logloss %.5f  auc %.4f" % (report.dnn_val_logloss, evaluate(dnn, va).auc))
print("AFN+ val logloss %.5f  auc %.4f" % (report.val_logloss, report.val_auc))
print("blend w1=%.3f w2=%.3f b=%.3f" % (params.w1, params.w2, params.b))
# the blend never does worse than either part: (1,0,0) and (0,1,0) are always candidates
assert evaluate_ensemble(params, afn, dnn, va).logloss <= min(report.afn_val_logloss, report.dnn_val_logloss)
