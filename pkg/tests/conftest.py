import os

import numpy as np
import pytest

from graphmix import SplitSpec, make_synthetic, normalize_adjacency, random_split


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)), 1e-12)
    return float(np.linalg.norm(a - b)) / denom


def finite_difference(loss_fn, value: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar loss over one array,
    mutating it in place entry by entry."""
    grad = np.zeros_like(value)
    it = np.nditer(value, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        old = value[idx]
        value[idx] = old + eps
        up = loss_fn()
        value[idx] = old - eps
        down = loss_fn()
        value[idx] = old
        grad[idx] = (up - down) / (2 * eps)
        it.iternext()
    return grad


def dataset_dir(name: str):
    """Canonical directory for a converted dataset, or None.

    Looked up under $GRAPHMIX_DATA_DIR, then ./data relative to the repo
    root (the directory holding this tests/ folder)."""
    candidates = []
    env = os.environ.get("GRAPHMIX_DATA_DIR")
    if env:
        candidates.append(os.path.join(env, name))
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates.append(os.path.join(here, "data", name))
    for c in candidates:
        if os.path.exists(os.path.join(c, "meta.json")):
            return c
    return None


def require_dataset(name: str) -> str:
    path = dataset_dir(name)
    if path is None:
        pytest.skip(
            f"dataset {name!r} not converted locally; run the converter "
            f"(see README, 'Datasets') and set GRAPHMIX_DATA_DIR"
        )
    return path


@pytest.fixture(scope="session")
def tiny():
    """Small planted-partition dataset with a split, plus its normalized
    adjacency. Session-scoped; treat as read-only."""
    ds = make_synthetic(num_nodes=120, num_classes=4, num_features=16, seed=3)
    masks = random_split(ds, SplitSpec(per_class_train=4, num_val=24, test=40, seed=1))
    ds = ds.with_split(*masks)
    ds.validate()
    return ds, normalize_adjacency(ds.graph)


@pytest.fixture(scope="session")
def mini():
    """The default-size synthetic dataset used for end-to-end runs."""
    ds = make_synthetic()
    masks = random_split(ds, SplitSpec(per_class_train=5, num_val=50, test=100, seed=0))
    ds = ds.with_split(*masks)
    return ds, normalize_adjacency(ds.graph)
