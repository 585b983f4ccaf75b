"""Metrics, multi-seed aggregation, soft-rank analysis of hidden states,
and the hidden-state export used for external visualization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, gcn_hidden


def accuracy(predictions, labels, mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty evaluation mask")
    return float((np.asarray(predictions)[mask] == np.asarray(labels)[mask]).mean())


def binary_f1(predictions, labels, mask, positive_class: int) -> float:
    """2PR/(P+R) for one class treated as positive; 0 when degenerate."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty evaluation mask")
    pred = np.asarray(predictions)[mask] == positive_class
    true = np.asarray(labels)[mask] == positive_class
    tp = float((pred & true).sum())
    fp = float((pred & ~true).sum())
    fn = float((~pred & true).sum())
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _jacobi_eigenvalues(g: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
    sweeping until the off-diagonal mass falls below tol relative to the
    Frobenius norm."""
    a = g.copy()
    n = a.shape[0]
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return np.zeros(n)
    for _ in range(100):
        off = math.sqrt(max(float((a * a).sum() - (np.diag(a) ** 2).sum()), 0.0))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:  # sqrt(1 + theta^2) would overflow
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.diag(a).copy()


def singular_values(h: np.ndarray) -> np.ndarray:
    """Descending singular values via the eigenvalues of the smaller Gram
    matrix."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2:
        raise ValueError("expected a matrix")
    g = h @ h.T if h.shape[0] < h.shape[1] else h.T @ h
    eig = _jacobi_eigenvalues(g)
    eig = np.where(eig > 0, eig, 0.0)
    return np.sort(np.sqrt(eig))[::-1]


def soft_rank(h: np.ndarray) -> float:
    """Sum of singular values over the largest one. Values below
    1e-12 * sigma_max count as zero."""
    sv = singular_values(h)
    if sv.shape[0] == 0 or sv[0] == 0.0:
        raise ValueError("soft rank of a zero matrix is undefined")
    sv = np.where(sv >= 1e-12 * sv[0], sv, 0.0)
    return float(sv.sum() / sv[0])


def class_soft_ranks(hidden_states: np.ndarray, labels, mask, num_classes: int):
    """Soft-rank of each class's hidden-state rows; NaN for classes with
    no rows under the mask."""
    mask = np.asarray(mask, dtype=bool)
    labels = np.asarray(labels)
    out = []
    for c in range(num_classes):
        rows = hidden_states[mask & (labels == c)]
        if rows.shape[0] == 0 or not rows.any():
            out.append(float("nan"))
        else:
            out.append(soft_rank(rows))
    return out


def export_hidden(params: ModelParams, a_hat, x, labels, path: str) -> None:
    """Write the eval-mode GCN hidden layer as CSV rows
    node,label,h_0,...,h_{k-1}."""
    hidden = gcn_hidden(params, a_hat, x)
    labels = np.asarray(labels)
    with open(path, "w", encoding="utf-8") as f:
        header = ",".join(["node", "label"] + [f"h_{j}" for j in range(hidden.shape[1])])
        f.write(header + "\n")
        for i in range(hidden.shape[0]):
            values = ",".join(repr(float(v)) for v in hidden[i])
            f.write(f"{i},{labels[i]},{values}\n")


@dataclass
class MetricReport:
    metric: str
    values: list
    mean: float
    std: float
    n_trials: int


def aggregate(trials, metric_name: "str | None" = None) -> MetricReport:
    """Mean and sample (n-1) standard deviation of the selected test metric
    across trials. Accepts trial results or plain numbers."""
    if not trials:
        raise ValueError("no trials to aggregate")
    first = trials[0]
    if hasattr(first, "selected_test_metric"):
        values = [float(t.selected_test_metric) for t in trials]
        name = metric_name if metric_name is not None else first.metric_name
    else:
        values = [float(t) for t in trials]
        name = metric_name if metric_name is not None else "value"
    mean = float(np.mean(values))
    std = 0.0 if len(values) == 1 else float(np.std(values, ddof=1))
    return MetricReport(name, values, mean, std, len(values))
