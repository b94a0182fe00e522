"""Layers downstream of the logarithmic neurons and the full AFN model.

Forward contractions use ``np.einsum`` rather than BLAS ``matmul``: BLAS picks
different kernels for different batch sizes, which breaks bit-identical
inference between a singleton batch and a larger one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Batch
from .embedding import embed, embed_backward, init_tables, positive_clamp
from .logtransform import (
    LtlParams,
    log_embeddings,
    saturating_exp,
    saturating_exp_backward,
    weighted_log_sum,
    weighted_log_sum_backward,
)
from .model import Model

TRAIN, INFER = "train", "infer"


@dataclass
class DenseLayer:
    W: np.ndarray  # [out, in]
    b: np.ndarray  # [out]


@dataclass
class PredictionHead:
    w: np.ndarray
    b: np.ndarray  # shape [1]


@dataclass
class BatchNorm:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.9
    eps: float = 1e-5

    @classmethod
    def fresh(cls, dim: int, momentum: float = 0.9, eps: float = 1e-5) -> "BatchNorm":
        return cls(np.ones(dim), np.zeros(dim), np.zeros(dim), np.ones(dim), momentum, eps)

    def update_running(self, cache) -> None:
        """In-place running-statistic update from a train-mode cache."""
        if cache["mode"] != TRAIN:
            return
        a = self.momentum
        self.running_mean *= a
        self.running_mean += (1.0 - a) * cache["mean"]
        self.running_var *= a
        self.running_var += (1.0 - a) * cache["var"]


def bn_forward(x: np.ndarray, bn: BatchNorm, mode: str):
    """Normalize ``x`` ([K, d]) per coordinate, then scale by gamma and shift by beta."""
    if mode == TRAIN:
        if x.shape[0] < 2:
            raise ValueError("batch normalization in train mode needs a batch of at least 2")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
    elif mode == INFER:
        mean, var = bn.running_mean, bn.running_var
    else:
        raise ValueError(f"unknown mode {mode!r}")
    inv_std = 1.0 / np.sqrt(var + bn.eps)
    xhat = (x - mean) * inv_std
    cache = {"mode": mode, "xhat": xhat, "inv_std": inv_std, "gamma": bn.gamma, "mean": mean, "var": var}
    return bn.gamma * xhat + bn.beta, cache


def bn_backward(dout: np.ndarray, cache):
    xhat, inv_std, gamma = cache["xhat"], cache["inv_std"], cache["gamma"]
    dgamma = (dout * xhat).sum(axis=0)
    dbeta = dout.sum(axis=0)
    dxhat = dout * gamma
    if cache["mode"] == INFER:
        return dxhat * inv_std, dgamma, dbeta
    k = dout.shape[0]
    dx = inv_std / k * (k * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    return dx, dgamma, dbeta


def concat_neurons(Y: np.ndarray) -> np.ndarray:
    """Flatten neuron outputs ``[..., N, k]`` neuron-major into ``[..., N*k]``."""
    return Y.reshape(*Y.shape[:-2], Y.shape[-2] * Y.shape[-1])


def dense_forward(x: np.ndarray, layer: DenseLayer) -> np.ndarray:
    if x.shape[-1] != layer.W.shape[1]:
        raise ValueError(f"dense layer expects width {layer.W.shape[1]}, got {x.shape[-1]}")
    return np.einsum("...i,oi->...o", x, layer.W) + layer.b


def mlp_forward(z0: np.ndarray, layers: list[DenseLayer], bns: list, mode: str = INFER):
    """``z_l = ReLU(BN_l(W_l z_{l-1} + b_l))``; entries of ``bns`` may be None (no BN).

    Returns ``(z_L, cache)``. With no layers ``z_L`` is ``z0``.
    """
    z = z0
    steps = []
    for layer, bn in zip(layers, bns):
        a = dense_forward(z, layer)
        bn_cache = None
        if bn is not None:
            squeeze = a.ndim == 1
            a2, bn_cache = bn_forward(a[None] if squeeze else a, bn, mode)
            a = a2[0] if squeeze else a2
        steps.append((z, bn_cache, a))
        z = np.maximum(a, 0.0)
    return z, steps


def mlp_backward(dz: np.ndarray, layers: list[DenseLayer], cache):
    """Returns ``(dz0, [(dW, db)], [(dgamma, dbeta) or None])`` for a batched forward."""
    layer_grads, bn_grads = [], []
    for layer, (z_in, bn_cache, a) in zip(reversed(layers), reversed(cache)):
        da = dz * (a > 0)
        if bn_cache is not None:
            da, dg, db_ = bn_backward(da, bn_cache)
            bn_grads.append((dg, db_))
        else:
            bn_grads.append(None)
        layer_grads.append((da.T @ z_in, da.sum(axis=0)))
        dz = da @ layer.W
    return dz, layer_grads[::-1], bn_grads[::-1]


def predict_logit(zL: np.ndarray, head: PredictionHead):
    if zL.shape[-1] != head.w.shape[0]:
        raise ValueError(f"head expects width {head.w.shape[0]}, got {zL.shape[-1]}")
    return np.einsum("...i,i->...", zL, head.w) + head.b[0]


class DeepStack:
    """Named MLP + head parameters living inside a model's param dict."""

    def __init__(self, model: Model, in_dim: int, prefix: str = ""):
        self.model = model
        self.in_dim = in_dim
        self.prefix = prefix

    @property
    def depth(self) -> int:
        return len(self.model.config.hidden)

    def init(self, rng: np.random.Generator) -> None:
        cfg, p = self.model.config, self.prefix
        fan_in = self.in_dim
        for l, width in enumerate(cfg.hidden):
            bound = np.sqrt(6.0 / fan_in)  # He uniform
            self.model.params[f"{p}mlp.{l}.W"] = rng.uniform(-bound, bound, size=(width, fan_in))
            self.model.params[f"{p}mlp.{l}.b"] = np.zeros(width)
            if cfg.bn:
                add_bn(self.model, f"{p}bn.mlp{l}", width)
            fan_in = width
        bound = 1.0 / np.sqrt(fan_in)
        self.model.params[f"{p}head.w"] = rng.uniform(-bound, bound, size=fan_in)
        self.model.params[f"{p}head.b"] = np.zeros(1)

    def layers(self) -> list[DenseLayer]:
        P, p = self.model.params, self.prefix
        return [DenseLayer(P[f"{p}mlp.{l}.W"], P[f"{p}mlp.{l}.b"]) for l in range(self.depth)]

    def bns(self) -> list:
        if not self.model.config.bn:
            return [None] * self.depth
        return [bn_view(self.model, f"{self.prefix}bn.mlp{l}") for l in range(self.depth)]

    def head(self) -> PredictionHead:
        P, p = self.model.params, self.prefix
        return PredictionHead(P[f"{p}head.w"], P[f"{p}head.b"])

    def forward(self, z0: np.ndarray, mode: str):
        zL, mlp_cache = mlp_forward(z0, self.layers(), self.bns(), mode)
        return predict_logit(zL, self.head()), (zL, mlp_cache)

    def backward(self, g: np.ndarray, cache, grads: dict) -> np.ndarray:
        zL, mlp_cache = cache
        p = self.prefix
        head = self.head()
        grads[f"{p}head.w"] = zL.T @ g
        grads[f"{p}head.b"] = np.array([g.sum()])
        dz0, layer_grads, bn_grads = mlp_backward(np.outer(g, head.w), self.layers(), mlp_cache)
        for l, ((dW, db), bg) in enumerate(zip(layer_grads, bn_grads)):
            grads[f"{p}mlp.{l}.W"] = dW
            grads[f"{p}mlp.{l}.b"] = db
            if bg is not None:
                grads[f"{p}bn.mlp{l}.gamma"], grads[f"{p}bn.mlp{l}.beta"] = bg
        return dz0

    def commit(self, cache) -> None:
        _, mlp_cache = cache
        for bn, (_, bn_cache, _) in zip(self.bns(), mlp_cache):
            if bn is not None:
                bn.update_running(bn_cache)


def add_bn(model: Model, name: str, dim: int) -> None:
    model.params[f"{name}.gamma"] = np.ones(dim)
    model.params[f"{name}.beta"] = np.zeros(dim)
    model.buffers[f"{name}.running_mean"] = np.zeros(dim)
    model.buffers[f"{name}.running_var"] = np.ones(dim)


def bn_view(model: Model, name: str) -> BatchNorm:
    P, B, c = model.params, model.buffers, model.config
    return BatchNorm(P[f"{name}.gamma"], P[f"{name}.beta"], B[f"{name}.running_mean"],
                     B[f"{name}.running_var"], c.bn_momentum, c.bn_eps)


class AFN(Model):
    """Embeddings -> clamp -> ln -> [BN] -> weighted sum -> exp -> [BN] -> MLP -> logit."""

    kind = "afn"

    def init_params(self, rng):
        c = self.config
        k, n = c.embed_dim, c.log_neurons
        self.params.update(init_tables(self.schema, k, rng, c.init_scale))
        self.params["ltl.W"] = LtlParams.init(self.m, n, rng).W
        if c.bn:
            first_dim = self.m * k if c.ln_bn_site == "ln" else n * k
            add_bn(self, f"bn.{c.ln_bn_site}", first_dim)
            add_bn(self, "bn.exp", n * k)
        self.stack = DeepStack(self, n * k)
        self.stack.init(rng)

    @property
    def uses_batch_stats(self) -> bool:
        return self.config.bn

    def _bn2d(self, site, x, mode):
        K = x.shape[0]
        out, cache = bn_forward(x.reshape(K, -1), bn_view(self, f"bn.{site}"), mode)
        return out.reshape(x.shape), cache

    def forward(self, batch: Batch, mode: str = INFER):
        c = self.config
        W = self.params["ltl.W"]
        E = embed(batch, self.params, self.schema)
        P = positive_clamp(E, c.clamp_eps)
        L = log_embeddings(P)
        cache = {"batch": batch, "E": E, "P": P}
        if c.bn and c.ln_bn_site == "ln":
            L, cache["bn_first"] = self._bn2d("ln", L, mode)
        S = weighted_log_sum(L, W)
        if c.bn and c.ln_bn_site == "sum":
            S, cache["bn_first"] = self._bn2d("sum", S, mode)
        Y = saturating_exp(S, c.exp_clip)
        cache.update(L=L, S=S, Y=Y)
        if c.bn:
            Y, cache["bn_exp"] = self._bn2d("exp", Y, mode)
        logits, cache["stack"] = self.stack.forward(concat_neurons(Y), mode)
        return logits, cache

    def backward(self, cache, grad_logits):
        c = self.config
        grads = {}
        dz0 = self.stack.backward(grad_logits, cache["stack"], grads)
        Y, S, L = cache["Y"], cache["S"], cache["L"]
        dY = dz0.reshape(Y.shape)
        if c.bn:
            dY, grads["bn.exp.gamma"], grads["bn.exp.beta"] = _bn2d_backward(dY, cache["bn_exp"])
        dS = saturating_exp_backward(S, Y, dY, c.exp_clip)
        site = c.ln_bn_site
        if c.bn and site == "sum":
            dS, grads["bn.sum.gamma"], grads["bn.sum.beta"] = _bn2d_backward(dS, cache["bn_first"])
        grads["ltl.W"], dL = weighted_log_sum_backward(L, self.params["ltl.W"], dS)
        if c.bn and site == "ln":
            dL, grads["bn.ln.gamma"], grads["bn.ln.beta"] = _bn2d_backward(dL, cache["bn_first"])
        dP = dL / cache["P"]
        grads.update(embed_backward(cache["batch"], dP, self.params, self.schema,
                                    clamped_from=cache["E"], eps=c.clamp_eps))
        return grads

    def commit_stats(self, cache):
        c = self.config
        if not c.bn:
            return
        bn_view(self, f"bn.{c.ln_bn_site}").update_running(cache["bn_first"])
        bn_view(self, "bn.exp").update_running(cache["bn_exp"])
        self.stack.commit(cache["stack"])

    def ltl(self) -> LtlParams:
        return LtlParams(self.params["ltl.W"])


def _bn2d_backward(dout: np.ndarray, cache):
    K = dout.shape[0]
    dx, dg, db = bn_backward(dout.reshape(K, -1), cache)
    return dx.reshape(dout.shape), dg, db


def afn_forward(model: AFN, batch: Batch, mode: str = INFER):
    return model.forward(batch, mode)


def afn_backward(model: AFN, batch: Batch, mode: str = TRAIN):
    """Gradients of the mean log loss over ``batch`` for every AFN parameter."""
    _, grads, _ = model.loss_and_grads(batch, mode)
    return grads
