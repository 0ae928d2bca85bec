"""
A p-RBM small enough to enumerate
=================================

Two stocks, two hidden units, one step of memory. Everything the sampler
does can be checked against brute force at this size.
"""

import numpy as np

from prbm import ModelShape, build_forgetting_matrix, energy, init_model
from prbm.exact import exact_conditionals, partition_function, visible_marginal
from prbm.sampling import gibbs_chain, make_rng, predict_direction

# The forgetting matrix scales each lag pair by alpha**|i-j|.
# The last row and column belong to the biases and are never scaled.
print(build_forgetting_matrix(0.5, 2))

shape = ModelShape(n=2, m=2, p=1, alpha=0.5)
model = init_model(shape, make_rng(0), scale=1.0)

# visible and hidden units are (p+1, n) and (p+1, m) blocks, row 0 = present
v = np.array([[1, 0], [1, 1]])
h = np.array([[0, 1], [1, 0]])
print("E(v, h) =", energy(model, v, h))

# 2**8 joint configurations: small enough to sum exactly
print("log Z =", partition_function(model))

# hidden units are independent given the visibles, and the oracle agrees
cond = exact_conditionals(model, v=v)
print("p(h = 1 | v) =", cond.probs.round(4).tolist(), "factorization error", cond.factorization_error)

# Long Gibbs chains forget where they started and land on p(v)
state = gibbs_chain(model, np.zeros((20_000, 2, 2)), k=500, rng=make_rng(1))
codes = state.v.reshape(len(state.v), -1).astype(int) @ np.array([8, 4, 2, 1])
empirical = np.bincount(codes, minlength=16) / len(codes)
print("total variation to p(v):", 0.5 * np.abs(empirical - visible_marginal(model)).sum())

# Prediction clamps the past block and refines only the present one
pred = predict_direction(model, past=np.array([[1, 0]]))
print("p(up) =", pred.probs.round(3), "direction", pred.direction)
