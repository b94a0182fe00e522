#!/usr/bin/env python3
# With {0,1} powers, one logarithmic neuron per field pair is exactly a pairwise
# factorization-machine term. Build that AFN by hand and compare with FM and HOFM.

from itertools import combinations

import numpy as np

from afn.baselines import FM, HOFM, linear_params, fm_forward, hofm_forward
from afn.data import CATEGORICAL, Batch, FieldSchema
from afn.embedding import positive_clamp
from afn.model import ModelConfig
from afn.network import AFN

m, k, card = 5, 3, 6
rng = np.random.default_rng(0)
schema = [FieldSchema(i, f"f{i}", CATEGORICAL, card, tuple(f"t{j}" for j in range(card - 1)))
          for i in range(m)]
tables = {i: rng.normal(scale=0.7, size=(card, k)) for i in range(m)}
batch = Batch(np.zeros(4), rng.integers(0, card, size=(4, m)), np.ones((4, m)))

for max_order, cls in ((2, FM), (3, HOFM)):
    subsets = [S for r in range(2, max_order + 1) for S in combinations(range(m), r)]
    W = np.zeros((m, len(subsets)))
    for j, S in enumerate(subsets):
        W[list(S), j] = 1.0

    # no normalization and no hidden layers: the head just sums every neuron output
    afn = AFN(schema, ModelConfig(embed_dim=k, log_neurons=len(subsets), hidden=(), bn=False))
    afn.params["ltl.W"][...] = W
    afn.params["head.w"][:] = 1.0
    afn.params["head.b"][:] = 0.0

    fm = cls(schema, ModelConfig(embed_dim=k, max_order=max_order))
    for i in range(m):
        afn.params[f"embed.cat.{i}"][...] = tables[i]
        # the reference sees the same clamped embeddings the AFN multiplies
        fm.params[f"{fm.prefix}embed.cat.{i}"][...] = positive_clamp(tables[i], 1e-7)

    lin = linear_params(fm, fm.prefix)
    if max_order == 2:
        ref = fm_forward(batch, lin, fm.params, schema, fm.prefix)
    else:
        ref = hofm_forward(batch, lin, fm.params, schema, max_order, fm.prefix)
    got = afn.predict_logits(batch)
    print(f"orders 2..{max_order}: {len(subsets)} neurons")
    print("  AFN :", got)
    print("  ref :", ref)
    print("  max |diff| =", np.abs(got - ref).max())
