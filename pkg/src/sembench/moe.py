"""Mixture-of-Experts routing arithmetic on token batches.

Tokens are plain (B, P, d) arrays.  Experts are affine maps d -> d, which
keeps every oracle exact while exercising the actual routing math: softmax
gating, top-k sparsification with renormalization, conditional mixture
evaluation, and the load-balance regularizer whose minimum (exactly 1) is
attained at uniform expert usage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExpertSet",
    "GateParams",
    "gate",
    "top_k_route",
    "moe_forward",
    "load_balance_loss",
]


@dataclass(frozen=True)
class ExpertSet:
    """K affine experts: weights (K, d, d) and biases (K, d)."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.biases, dtype=np.float64)
        if w.ndim != 3 or w.shape[1] != w.shape[2]:
            raise ValueError(f"expert weights must be (K, d, d), got {w.shape}")
        if b.shape != (w.shape[0], w.shape[1]):
            raise ValueError(f"expert biases must be (K, d), got {b.shape}")
        if w.shape[0] < 1:
            raise ValueError("need at least one expert")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def k_experts(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def to_json(self) -> str:
        return json.dumps(
            {"weights": self.weights.tolist(), "biases": self.biases.tolist()},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ExpertSet":
        d = json.loads(text)
        return cls(np.asarray(d["weights"]), np.asarray(d["biases"]))


@dataclass(frozen=True)
class GateParams:
    """Routing logits: tokens @ weight + bias, weight (d, K), bias (K,)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[1],):
            raise ValueError(f"gate shapes inconsistent: {w.shape} vs {b.shape}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    def to_json(self) -> str:
        return json.dumps(
            {"weight": self.weight.tolist(), "bias": self.bias.tolist()},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "GateParams":
        d = json.loads(text)
        return cls(np.asarray(d["weight"]), np.asarray(d["bias"]))


def _check_tokens(tokens) -> np.ndarray:
    t = np.asarray(tokens, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError(f"tokens must be (B, P, d), got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError("tokens must be finite")
    return t


def gate(tokens: np.ndarray, g: GateParams) -> np.ndarray:
    """Per-token routing weights: softmax(tokens @ W + b) over experts.

    Stable (max-subtracted) softmax; every row sums to 1 and all entries
    are strictly positive.
    """
    t = _check_tokens(tokens)
    if t.shape[2] != g.weight.shape[0]:
        raise ValueError(
            f"token dim {t.shape[2]} does not match gate dim {g.weight.shape[0]}"
        )
    logits = t @ g.weight + g.bias
    logits -= logits.max(axis=-1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=-1, keepdims=True)


def top_k_route(alpha: np.ndarray, k: int) -> np.ndarray:
    """Keep each token's k largest weights, zero the rest, renormalize.

    Ties are broken toward the lowest expert index (stable sort on the
    negated weights), so routing is deterministic.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    n_exp = alpha.shape[-1]
    if not 1 <= k <= n_exp:
        raise ValueError(f"k must be in [1, {n_exp}], got {k}")
    order = np.argsort(-alpha, axis=-1, kind="stable")
    keep = order[..., :k]
    out = np.zeros_like(alpha)
    np.put_along_axis(out, keep, np.take_along_axis(alpha, keep, axis=-1), axis=-1)
    return out / out.sum(axis=-1, keepdims=True)


def moe_forward(
    tokens: np.ndarray, experts: ExpertSet, g: GateParams, k: int = 1
) -> np.ndarray:
    """Sparse mixture: sum over routed experts of alpha_k * (W_k h + b_k).

    Routing weights come from ``top_k_route(gate(tokens, g), k)``.  An
    expert that receives weight zero for every token is never evaluated,
    honoring the conditional-computation contract (its weights may even be
    non-finite without contaminating the output).
    """
    t = _check_tokens(tokens)
    if t.shape[2] != experts.dim:
        raise ValueError(
            f"token dim {t.shape[2]} does not match expert dim {experts.dim}"
        )
    alpha = top_k_route(gate(t, g), k)
    out = np.zeros_like(t)
    flat = t.reshape(-1, t.shape[2])
    aflat = alpha.reshape(-1, experts.k_experts)
    oflat = out.reshape(-1, t.shape[2])
    for e in range(experts.k_experts):
        sel = aflat[:, e] > 0
        if not sel.any():
            continue
        y = flat[sel] @ experts.weights[e].T + experts.biases[e]
        oflat[sel] += aflat[sel, e, None] * y
    return out


def load_balance_loss(alpha: np.ndarray) -> float:
    """Usage-concentration penalty K * sum_k mean(alpha_k)^2.

    alpha holds per-token routing weights (last axis = experts), each row
    summing to 1.  The value is 1 exactly at uniform usage and K at full
    collapse onto one expert.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim < 2:
        raise ValueError("alpha must have at least token and expert axes")
    rows = alpha.reshape(-1, alpha.shape[-1])
    sums = rows.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > 1e-8:
        raise ValueError("each token's routing weights must sum to 1")
    abar = rows.mean(axis=0)
    n_exp = rows.shape[1]
    return float(n_exp * np.sum(abar**2))
