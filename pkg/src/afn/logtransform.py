"""Vector-wise logarithmic neurons.

Neuron ``j`` maps positive field embeddings ``e_1..e_m`` to
``exp(sum_i w_ij * ln e_i) = e_1**w_1j * ... * e_m**w_mj`` element-wise, so each
column of the ``[m, N]`` coefficient matrix encodes the per-field powers of one
learned cross feature. Inputs may be a single ``[m, k]`` matrix or a ``[K, m, k]``
batch.

The forward pass is split into ``log_embeddings``, ``weighted_log_sum`` and
``saturating_exp`` so callers can insert normalization between the stages.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

EXP_CLIP = 30.0


@dataclass
class LtlParams:
    W: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        if self.W.ndim != 2:
            raise ValueError("W must be an [m, N] matrix")
        if not np.all(np.isfinite(self.W)):
            raise ValueError("W must be finite")

    @property
    def num_neurons(self) -> int:
        return self.W.shape[1]

    @classmethod
    def init(cls, m: int, n_neurons: int, rng: np.random.Generator) -> "LtlParams":
        return cls(rng.uniform(0.0, 1.0 / m, size=(m, n_neurons)))


def log_embeddings(E_pos: np.ndarray) -> np.ndarray:
    if np.any(E_pos <= 0):
        raise ValueError("logarithmic neurons need strictly positive inputs")
    return np.log(E_pos)


def weighted_log_sum(L: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``S[..., j, d] = sum_i W[i, j] * L[..., i, d]``."""
    return np.einsum("...id,ij->...jd", L, W)


def weighted_log_sum_backward(L: np.ndarray, W: np.ndarray, grad_S: np.ndarray):
    m, k = L.shape[-2:]
    grad_W = np.einsum("bid,bjd->ij", L.reshape(-1, m, k), grad_S.reshape(-1, grad_S.shape[-2], k))
    grad_L = np.einsum("...jd,ij->...id", grad_S, W)
    return grad_W, grad_L


def saturating_exp(S: np.ndarray, clip: float = EXP_CLIP) -> np.ndarray:
    return np.exp(np.clip(S, -clip, clip))


def saturating_exp_backward(S: np.ndarray, Y: np.ndarray, grad_Y: np.ndarray,
                            clip: float = EXP_CLIP) -> np.ndarray:
    return grad_Y * Y * (np.abs(S) <= clip)


def ltl_forward(E_pos: np.ndarray, params: LtlParams, clip: float = EXP_CLIP) -> np.ndarray:
    """Outputs of all neurons: ``[N, k]`` (or ``[K, N, k]`` for a batch).

    The log-sum is accumulated in ``np.longdouble``. In plain float64 the
    absolute rounding error of ``S`` becomes relative error after ``exp``, so
    a product of six factors can be off by 20+ ulps; with the x87 extended
    format integer powers reproduce direct products to a couple of ulps. On
    platforms where ``longdouble`` is just float64 this degrades gracefully.
    The model's training path uses the float64 stages above, which leave room
    for normalization between them.
    """
    L = log_embeddings(np.asarray(E_pos, dtype=np.longdouble))
    S = weighted_log_sum(L, params.W.astype(np.longdouble))
    return saturating_exp(S, clip).astype(np.float64)


def ltl_backward(E_pos: np.ndarray, params: LtlParams, upstream: np.ndarray,
                 clip: float = EXP_CLIP):
    """Gradients ``(grad_W [m, N], grad_E [same shape as E_pos])``."""
    L = log_embeddings(E_pos)
    S = weighted_log_sum(L, params.W)
    Y = saturating_exp(S, clip)
    grad_S = saturating_exp_backward(S, Y, upstream, clip)
    grad_W, grad_L = weighted_log_sum_backward(L, params.W, grad_S)
    return grad_W, grad_L / E_pos


def cross_feature_order(params: LtlParams, j: int) -> float:
    """Order of neuron ``j``: the sum of absolute per-field powers."""
    n = params.num_neurons
    if not 0 <= j < n:
        raise IndexError(f"neuron index {j} out of range [0, {n})")
    return float(np.abs(params.W[:, j]).sum())


def cross_feature_orders(params: LtlParams) -> np.ndarray:
    return np.abs(params.W).sum(axis=0)


def field_order_profile(params: LtlParams):
    """``(|W| [m, N], per-field totals [m])``."""
    A = np.abs(params.W)
    return A, A.sum(axis=1)


def export_order_profile(params: LtlParams, weights_path, orders_path) -> None:
    A, _ = field_order_profile(params)
    m, n = A.shape
    with open(weights_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["neuron_id", "field_id", "abs_weight"])
        for j in range(n):
            for i in range(m):
                w.writerow([j, i, repr(float(A[i, j]))])
    with open(orders_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["neuron_id", "order"])
        for j, order in enumerate(cross_feature_orders(params)):
            w.writerow([j, repr(float(order))])
