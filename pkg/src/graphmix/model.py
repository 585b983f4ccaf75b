"""Two-layer GCN and its aggregation-free FCN twin over one shared set of
weights, plus the hidden-state mixup forward used for semi-supervised
training. Backward passes are hand-written and accumulate into
Parameter.grad so multi-term losses can sum gradients before one
optimizer step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .nn import Parameter
from .rng import Rng
from .sparse import CSRMatrix


class FeatureSource:
    """Dense or CSR feature rows with the input-layer products both
    representations need: dropout, X @ W, and X^T @ dZ (via a cached
    transpose plan for the sparse case)."""

    def __init__(self, x):
        self.x = x
        self.is_sparse = isinstance(x, CSRMatrix)
        self._tplan = None

    @property
    def shape(self):
        return self.x.shape

    def take(self, ids) -> "FeatureSource":
        ids = np.asarray(ids, dtype=np.int64)
        return FeatureSource(self.x.take_rows(ids) if self.is_sparse else self.x[ids])

    def _plan(self):
        if self._tplan is None:
            self._tplan = self.x.transpose_plan()
        return self._tplan

    def dropout(self, rate, gen, train: bool) -> "DroppedFeatures":
        if self.is_sparse:
            if not train or rate == 0.0:
                return DroppedFeatures(self, self.x.values)
            mask = gen.random(self.x.values.shape) >= rate
            return DroppedFeatures(self, self.x.values * mask / (1.0 - rate))
        out, _ = nn.dropout(self.x, rate, gen, train)
        return DroppedFeatures(self, out)


class DroppedFeatures:
    """One dropout realization of a FeatureSource; `data` is the dense
    matrix itself or the masked CSR value vector."""

    __slots__ = ("source", "data")

    def __init__(self, source: FeatureSource, data):
        self.source = source
        self.data = data

    def matmul(self, w: np.ndarray) -> np.ndarray:
        if self.source.is_sparse:
            x = self.source.x
            return CSRMatrix(x.shape, x.indptr, x.indices, self.data).matmul_dense(w)
        return self.data @ w

    def t_matmul(self, d: np.ndarray) -> np.ndarray:
        """X0^T @ d for the first-layer weight gradient."""
        if self.source.is_sparse:
            return self.source._plan().apply(self.data).matmul_dense(d)
        return self.data.T @ d


@dataclass
class MixSpec:
    lam: float
    permutation: np.ndarray

    def validate(self, n_rows: int) -> None:
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lam must lie in [0, 1]")
        p = self.permutation
        if p.shape != (n_rows,) or not np.array_equal(np.sort(p), np.arange(n_rows)):
            raise ValueError("permutation must be a bijection on the row set")


@dataclass
class ModelParams:
    w1: Parameter
    w2: Parameter
    b1: "Parameter | None" = None
    b2: "Parameter | None" = None

    @staticmethod
    def init(
        num_features: int,
        hidden: int,
        num_classes: int,
        rng: Rng,
        use_bias: bool = False,
    ) -> "ModelParams":
        gen = rng.derive("init")
        w1 = Parameter(nn.glorot(num_features, hidden, gen))
        w2 = Parameter(nn.glorot(hidden, num_classes, gen))
        b1 = Parameter(np.zeros(hidden)) if use_bias else None
        b2 = Parameter(np.zeros(num_classes)) if use_bias else None
        return ModelParams(w1, w2, b1, b2)

    def parameters(self):
        return [p for p in (self.w1, self.w2, self.b1, self.b2) if p is not None]

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.w1.copy(),
            self.w2.copy(),
            self.b1.copy() if self.b1 is not None else None,
            self.b2.copy() if self.b2 is not None else None,
        )

    @property
    def hidden_size(self) -> int:
        return self.w1.shape[1]


def ema_update(ema: ModelParams, current: ModelParams, decay: float) -> None:
    for e, c in zip(ema.parameters(), current.parameters()):
        e.value *= decay
        e.value += (1.0 - decay) * c.value


@dataclass
class ForwardCache:
    x0: DroppedFeatures
    z1: np.ndarray
    h_used: np.ndarray
    hidden_mask: "np.ndarray | None"
    hidden_rate: float
    mix: "MixSpec | None" = None


def _as_source(x) -> FeatureSource:
    return x if isinstance(x, FeatureSource) else FeatureSource(x)


def gcn_forward(
    params: ModelParams,
    a_hat: CSRMatrix,
    x,
    input_dropout: float,
    hidden_dropout: float,
    gen=None,
    train: bool = True,
):
    """logits = A_hat @ drop_h(relu(A_hat @ drop_in(X) @ W1)) @ W2,
    biases (when present) added after each aggregation."""
    x = _as_source(x)
    x0 = x.dropout(input_dropout, gen, train)
    z1 = a_hat.matmul_dense(x0.matmul(params.w1.value))
    if params.b1 is not None:
        z1 = z1 + params.b1.value
    h1, hidden_mask = nn.dropout(nn.relu(z1), hidden_dropout, gen, train)
    logits = a_hat.matmul_dense(h1 @ params.w2.value)
    if params.b2 is not None:
        logits = logits + params.b2.value
    return logits, ForwardCache(x0, z1, h1, hidden_mask, hidden_dropout)


def gcn_backward(cache: ForwardCache, d_logits: np.ndarray, params: ModelParams, a_hat: CSRMatrix) -> None:
    if params.b2 is not None:
        params.b2.grad += d_logits.sum(axis=0)
    d_m = a_hat.matmul_dense(d_logits)
    params.w2.grad += cache.h_used.T @ d_m
    d_h = d_m @ params.w2.value.T
    d_h = nn.dropout_backward(d_h, cache.hidden_mask, cache.hidden_rate)
    d_z1 = nn.relu_backward(d_h, cache.z1)
    if params.b1 is not None:
        params.b1.grad += d_z1.sum(axis=0)
    d_n = a_hat.matmul_dense(d_z1)
    params.w1.grad += cache.x0.t_matmul(d_n)


def fcn_forward(
    params: ModelParams,
    x,
    input_dropout: float,
    hidden_dropout: float,
    gen=None,
    train: bool = True,
):
    """Same stack without aggregation: drop_h(relu(drop_in(X) @ W1)) @ W2."""
    x = _as_source(x)
    x0 = x.dropout(input_dropout, gen, train)
    z1 = x0.matmul(params.w1.value)
    if params.b1 is not None:
        z1 = z1 + params.b1.value
    h1, hidden_mask = nn.dropout(nn.relu(z1), hidden_dropout, gen, train)
    logits = h1 @ params.w2.value
    if params.b2 is not None:
        logits = logits + params.b2.value
    return logits, ForwardCache(x0, z1, h1, hidden_mask, hidden_dropout)


def fcn_backward(cache: ForwardCache, d_logits: np.ndarray, params: ModelParams) -> None:
    if params.b2 is not None:
        params.b2.grad += d_logits.sum(axis=0)
    params.w2.grad += cache.h_used.T @ d_logits
    d_h = d_logits @ params.w2.value.T
    d_h = nn.dropout_backward(d_h, cache.hidden_mask, cache.hidden_rate)
    d_z1 = nn.relu_backward(d_h, cache.z1)
    if params.b1 is not None:
        params.b1.grad += d_z1.sum(axis=0)
    params.w1.grad += cache.x0.t_matmul(d_z1)


def fcn_mixup_forward(
    params: ModelParams,
    x_rows,
    target_rows: np.ndarray,
    mix: MixSpec,
    input_dropout: float,
    hidden_dropout: float,
    gen=None,
    train: bool = True,
):
    """Hidden-state mixing: rows of relu(drop_in(X) @ W1) are convexly
    combined with their permuted counterparts before the second layer,
    and the targets are combined with the same coefficient."""
    x = _as_source(x_rows)
    n = x.shape[0]
    mix.validate(n)
    if target_rows.shape[0] != n:
        raise ValueError("targets not row-aligned with features")
    x0 = x.dropout(input_dropout, gen, train)
    z1 = x0.matmul(params.w1.value)
    if params.b1 is not None:
        z1 = z1 + params.b1.value
    h1 = nn.relu(z1)
    h_mix = mix.lam * h1 + (1.0 - mix.lam) * h1[mix.permutation]
    h_mix, hidden_mask = nn.dropout(h_mix, hidden_dropout, gen, train)
    logits = h_mix @ params.w2.value
    if params.b2 is not None:
        logits = logits + params.b2.value
    mixed_targets = mix.lam * target_rows + (1.0 - mix.lam) * target_rows[mix.permutation]
    cache = ForwardCache(x0, z1, h_mix, hidden_mask, hidden_dropout, mix)
    return logits, mixed_targets, cache


def fcn_mixup_backward(cache: ForwardCache, d_logits: np.ndarray, params: ModelParams) -> None:
    mix = cache.mix
    if params.b2 is not None:
        params.b2.grad += d_logits.sum(axis=0)
    params.w2.grad += cache.h_used.T @ d_logits
    d_mix = d_logits @ params.w2.value.T
    d_mix = nn.dropout_backward(d_mix, cache.hidden_mask, cache.hidden_rate)
    d_h1 = mix.lam * d_mix
    d_h1[mix.permutation] += (1.0 - mix.lam) * d_mix
    d_z1 = nn.relu_backward(d_h1, cache.z1)
    if params.b1 is not None:
        params.b1.grad += d_z1.sum(axis=0)
    params.w1.grad += cache.x0.t_matmul(d_z1)


def gcn_hidden(params: ModelParams, a_hat: CSRMatrix, x) -> np.ndarray:
    """Eval-mode hidden layer relu(A_hat @ X @ W1), for export/analysis."""
    x = _as_source(x)
    x0 = x.dropout(0.0, None, False)
    z1 = a_hat.matmul_dense(x0.matmul(params.w1.value))
    if params.b1 is not None:
        z1 = z1 + params.b1.value
    return nn.relu(z1)


def save_checkpoint(params: ModelParams, path: str) -> None:
    arrays = {"w1": params.w1.value, "w2": params.w2.value}
    if params.b1 is not None:
        arrays["b1"] = params.b1.value
        arrays["b2"] = params.b2.value
    np.savez(path, **arrays)


def load_checkpoint(path: str) -> ModelParams:
    with np.load(path) as data:
        w1 = Parameter(data["w1"])
        w2 = Parameter(data["w2"])
        b1 = Parameter(data["b1"]) if "b1" in data else None
        b2 = Parameter(data["b2"]) if "b2" in data else None
    return ModelParams(w1, w2, b1, b2)
