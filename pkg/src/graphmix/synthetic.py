"""Small planted-partition dataset used for fast tests and as the
checked-in fixture: class-dependent feature prototypes plus Gaussian
noise, and a stochastic block model graph with higher in-class edge
probability."""

from __future__ import annotations

import numpy as np

from .graphdata import Dataset, Graph
from .rng import Rng


def make_synthetic(
    num_nodes: int = 250,
    num_classes: int = 5,
    num_features: int = 32,
    p_in: float = 0.08,
    p_out: float = 0.01,
    noise: float = 0.5,
    seed: int = 7,
    name: str = "mini",
) -> Dataset:
    if num_nodes < num_classes:
        raise ValueError("need at least one node per class")
    gen = Rng(seed).derive("synthetic")
    labels = (np.arange(num_nodes) % num_classes).astype(np.int64)
    prototypes = gen.uniform(0.0, 1.0, size=(num_classes, num_features))
    features = prototypes[labels] + noise * gen.normal(size=(num_nodes, num_features))

    src, dst = np.triu_indices(num_nodes, 1)
    same = labels[src] == labels[dst]
    prob = np.where(same, p_in, p_out)
    keep = gen.random(src.shape[0]) < prob
    graph = Graph.from_edges(num_nodes, src[keep], dst[keep])

    empty = np.zeros(num_nodes, dtype=bool)
    ds = Dataset(
        name, graph, features, labels, num_classes, empty, empty.copy(), empty.copy()
    )
    ds.validate()
    return ds
