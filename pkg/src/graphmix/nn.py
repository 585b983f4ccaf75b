"""Dense kernels with hand-derived gradients, dropout, losses, and Adam.

Matrices are plain float64 numpy arrays. Each forward op has an explicit
backward companion; the model layer composes them with cached
intermediates, the way a hand-written backprop pass does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sparse import CSRMatrix


@dataclass
class AdamConfig:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")


class Parameter:
    """A trainable matrix with its gradient and Adam moment buffers."""

    __slots__ = ("value", "grad", "adam_m", "adam_v", "step_count")

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.adam_m = np.zeros_like(self.value)
        self.adam_v = np.zeros_like(self.value)
        self.step_count = 0

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[:] = 0.0

    def copy(self) -> "Parameter":
        p = Parameter(self.value.copy())
        p.grad = self.grad.copy()
        p.adam_m = self.adam_m.copy()
        p.adam_v = self.adam_v.copy()
        p.step_count = self.step_count
        return p


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def matmul_backward(d_out, a, b):
    """Gradients of ``out = a @ b``: (d_out @ b.T, a.T @ d_out)."""
    return d_out @ b.T, a.T @ d_out


def spmm(s: CSRMatrix, x: np.ndarray) -> np.ndarray:
    return s.matmul_dense(x)


def spmm_backward(d_out: np.ndarray, s_transposed: CSRMatrix) -> np.ndarray:
    """Gradient w.r.t. the dense operand; pass s itself when symmetric."""
    return s_transposed.matmul_dense(d_out)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(d_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    return d_out * (x > 0.0)


def dropout(x: np.ndarray, rate: float, gen: np.random.Generator, train: bool = True):
    """Inverted dropout. Returns (out, mask); mask is None when inactive.

    rate 0 (or eval mode) is the identity and consumes no random draws.
    """
    if not (0.0 <= rate < 1.0):
        raise ValueError("dropout rate must lie in [0, 1)")
    if not train or rate == 0.0:
        return x, None
    mask = gen.random(x.shape) >= rate
    return x * mask / (1.0 - rate), mask


def dropout_backward(d_out: np.ndarray, mask, rate: float) -> np.ndarray:
    if mask is None:
        return d_out
    return d_out * mask / (1.0 - rate)


def dropout_csr(s: CSRMatrix, rate: float, gen: np.random.Generator, train: bool = True) -> CSRMatrix:
    """Inverted dropout over the stored entries of a sparse matrix.

    Zero entries stay zero under dropout, so masking the nonzeros is exact.
    Used for the input layer only; no backward needed (inputs are data).
    """
    if not (0.0 <= rate < 1.0):
        raise ValueError("dropout rate must lie in [0, 1)")
    if not train or rate == 0.0:
        return s
    mask = gen.random(s.values.shape) >= rate
    return s.scale_values(mask / (1.0 - rate))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, targets, row_weights=None):
    """Weighted-mean soft cross-entropy.

    loss = sum_i w_i * CE_i / sum_i w_i over rows with nonzero weight,
    d_logits = w_i * (softmax_i - target_i) / sum_i w_i.

    Target rows with nonzero weight must sum to 1; others are ignored.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if logits.shape != targets.shape:
        raise ValueError(f"shape mismatch: {logits.shape} vs {targets.shape}")
    n = logits.shape[0]
    if row_weights is None:
        weights = np.ones(n, dtype=np.float64)
    else:
        weights = np.asarray(row_weights, dtype=np.float64)
        if weights.shape != (n,):
            raise ValueError("row_weights length must match rows")
    selected = weights != 0.0
    total = weights.sum()
    if not selected.any() or total == 0.0:
        raise ValueError("no rows selected")
    sums = targets[selected].sum(axis=1)
    if (np.abs(sums - 1.0) > 1e-6).any() or (targets[selected] < -1e-12).any():
        raise ValueError("target rows must be probability vectors summing to 1")

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    per_row = -(targets * log_probs).sum(axis=1)
    loss = float((weights * np.where(selected, per_row, 0.0)).sum() / total)
    probs = np.exp(log_probs)
    d_logits = (probs - targets) * (weights / total)[:, None]
    return loss, d_logits


def adam_step(param: Parameter, cfg: AdamConfig) -> None:
    """Bias-corrected Adam with classic L2 (decay folded into the gradient).

    Clears the gradient buffer after applying the update.
    """
    g = param.grad
    if cfg.weight_decay != 0.0:
        g = g + cfg.weight_decay * param.value
    param.step_count += 1
    t = param.step_count
    param.adam_m = cfg.beta1 * param.adam_m + (1.0 - cfg.beta1) * g
    param.adam_v = cfg.beta2 * param.adam_v + (1.0 - cfg.beta2) * (g * g)
    m_hat = param.adam_m / (1.0 - cfg.beta1**t)
    v_hat = param.adam_v / (1.0 - cfg.beta2**t)
    param.value -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    param.zero_grad()


def sample_beta(alpha: float, gen: np.random.Generator) -> float:
    """Beta(alpha, alpha) draw; alpha == 0 is the mixing-disabled sentinel
    and returns 1.0 without consuming the stream."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha == 0.0:
        return 1.0
    return float(gen.beta(alpha, alpha))


def glorot(rows: int, cols: int, gen: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return gen.uniform(-limit, limit, size=(rows, cols))


@dataclass
class LossBreakdown:
    supervised: float = 0.0
    unsupervised: float = 0.0
    weight: float = 0.0
    total: float = 0.0
    extras: dict = field(default_factory=dict)
