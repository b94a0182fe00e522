#!/usr/bin/env python3
# A logarithmic neuron turns powers into weights: exp(sum_i w_i ln e_i) = prod_i e_i ** w_i.
# This walks through a single layer on a hand-made embedding matrix.

import numpy as np

from afn.logtransform import LtlParams, cross_feature_orders, field_order_profile, ltl_forward

np.set_printoptions(precision=4, suppress=True)

# three fields, embedding size 2, all entries positive (the model clamps them first)
E = np.array([[1.0, 2.0],
              [3.0, 4.0],
              [0.5, 0.25]])

# column j holds the powers of neuron j
W = np.array([[1.0, 0.0, 0.5],
              [1.0, 0.0, 0.0],
              [0.0, 0.0, -1.0]])
p = LtlParams(W)
Y = ltl_forward(E, p)

print("neuron 0 = e0 * e1          ->", Y[0], " direct:", E[0] * E[1])
print("neuron 1 = no field at all  ->", Y[1])
print("neuron 2 = sqrt(e0) / e2    ->", Y[2], " direct:", np.sqrt(E[0]) / E[2])

# the order of a learned cross feature is the sum of absolute powers
print("cross orders:", cross_feature_orders(p))
A, per_field = field_order_profile(p)
print("per-field order mass:", per_field)

# scaling one field by c scales neuron j by c ** w_ij
c = 3.0
E2 = E.copy()
E2[0] *= c
print("scaling field 0 by 3 multiplies the neurons by", (ltl_forward(E2, p) / Y)[:, 0],
      "expected", c ** W[0])
