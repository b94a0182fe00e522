#!/usr/bin/env python3
# Every model computes its gradients by hand. Central differences on a tiny problem
# keep them honest; corrupting one tensor shows what a failure looks like.

from afn.gradcheck import tiny_problem
from afn.training import grad_check

for kind in ("lr", "fm", "hofm", "dnn", "afn"):
    for bn in (True, False):
        model, batch = tiny_problem(kind, seed=0, bn=bn)
        res = grad_check(model, batch)
        print("%-4s bn=%-5s max relative error %.2e" % (kind, bn, res.max_rel_error))

model, batch = tiny_problem("afn", seed=0)
_, grads, _ = model.loss_and_grads(batch)
grads["ltl.W"] = -grads["ltl.W"]  # sabotage
res = grad_check(model, batch, analytic=grads)
print("negated ltl.W gradient -> error %.3f on ltl.W" % res.per_param["ltl.W"])
