"""
Mixture-of-experts routing arithmetic
=====================================

The routed layer in numbers small enough to read: a softmax gate scores
each token against K experts, top-k keeps the strongest weights and
renormalizes, and the forward pass evaluates only the experts that
actually received tokens.  The load-balance penalty watches the batch
statistics of those routing weights.
"""

import numpy as np

from sembench import ExpertSet, GateParams, gate, load_balance_loss, moe_forward, top_k_route

np.set_printoptions(precision=3, suppress=True)

# --- 1. gating ------------------------------------------------------------
# Two token clusters in a 2-d feature space; the gate's weight columns act
# as expert prototypes, so each cluster prefers a different expert.

tokens = np.array([
    [[2.0, 0.1], [1.8, -0.2], [0.2, 1.9], [-0.1, 2.2]],
])  # (batch=1, tokens=4, dim=2)
g = GateParams(
    weight=np.array([[2.0, -2.0, 0.0], [-2.0, 2.0, 0.0]]),  # (dim, K=3)
    bias=np.zeros(3),
)
alpha = gate(tokens, g)
print("softmax routing weights (rows sum to 1):")
print(alpha[0])

# --- 2. top-k sparsification ------------------------------------------------
# k=1 keeps the winner only; renormalization makes the kept weights a
# convex combination again.  Twin peaks resolve to the lowest index, so
# routing never depends on sort internals.

routed = top_k_route(alpha, k=1)
print("\ntop-1 routes:")
print(routed[0])
tied = np.array([[[0.4, 0.4, 0.2]]])
print(f"tie at experts 0 and 1 -> expert {int(np.argmax(top_k_route(tied, 1)))}")

# --- 3. conditional computation ----------------------------------------------
# Three affine experts: identity, doubling, and negation.  Under top-1 the
# cluster near (2, 0) lands on the doubling expert and the cluster near
# (0, 2) on the identity; the negation expert is never evaluated.

experts = ExpertSet(
    weights=np.stack([np.eye(2), 2.0 * np.eye(2), -np.eye(2)]),
    biases=np.zeros((3, 2)),
)
out = moe_forward(tokens, experts, g, k=1)
print("\ntop-1 mixture outputs:")
for token, result in zip(tokens[0], out[0]):
    print(f"  {token} -> {result}")

out2 = moe_forward(tokens, experts, g, k=2)
print("top-2 blends in the runner-up:")
for token, result in zip(tokens[0], out2[0]):
    print(f"  {token} -> {result}")

# --- 4. load balancing ---------------------------------------------------------
# K * sum of squared mean usage: exactly 1.0 when every expert carries the
# same share, K when one expert absorbs everything.  The sweep shows the
# penalty climbing as usage skews.

n_experts = 4
print(f"\nskew sweep over {n_experts} experts:")
for p in (0.25, 0.4, 0.6, 0.8, 1.0):
    rest = (1.0 - p) / (n_experts - 1)
    alpha = np.tile([p, rest, rest, rest], (64, 1)).reshape(1, 64, n_experts)
    print(f"  lead share {p:.2f} -> load_balance_loss {load_balance_loss(alpha):.3f}")
