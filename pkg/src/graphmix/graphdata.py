"""Graph datasets: in-memory types, adjacency normalization, split sampling,
dual-graph construction for link tasks, and the on-disk directory format.

A dataset directory holds:
  meta.json            {"name", "num_nodes", "num_features", "num_classes"}
  features.csv         "row,col,value" sparse triplets; absent entries are 0
  labels.csv           "node,label"; omitted nodes are unlabeled
  edges.csv            "src,dst", each undirected edge once with src < dst
  splits/<name>.json   {"train": [ids], "val": [ids], "test": [ids]}
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .rng import Rng
from .sparse import CSRMatrix

UNLABELED = -1

# Feature matrices below this nonzero density stay in CSR form.
SPARSE_DENSITY_CUTOFF = 0.25


class DataFormatError(ValueError):
    """Malformed dataset file; message carries file name and line/record."""


@dataclass
class Graph:
    num_nodes: int
    adjacency: CSRMatrix

    @staticmethod
    def from_edges(num_nodes: int, src, dst, values=None) -> "Graph":
        """Undirected graph from one-direction edge arrays (no self loops,
        no duplicate pairs; both checked)."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if (src == dst).any():
            raise ValueError("self loops are not allowed")
        if values is None:
            values = np.ones(src.shape[0], dtype=np.float64)
        else:
            values = np.asarray(values, dtype=np.float64)
        rows = np.concatenate([src, dst])
        cols = np.concatenate([dst, src])
        vals = np.concatenate([values, values])
        adj = CSRMatrix.from_coo(rows, cols, vals, (num_nodes, num_nodes), duplicates="error")
        return Graph(num_nodes, adj)

    @property
    def num_undirected_edges(self) -> int:
        return self.adjacency.nnz // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def undirected_edge_array(self):
        """(src, dst) with src < dst, row-major order; one row per edge."""
        a = self.adjacency
        row_ids = np.repeat(np.arange(self.num_nodes, dtype=np.int64), np.diff(a.indptr))
        upper = row_ids < a.indices
        return row_ids[upper], a.indices[upper]

    def validate(self) -> None:
        if self.num_nodes < 1:
            raise ValueError("graph must have at least one node")
        if self.adjacency.shape != (self.num_nodes, self.num_nodes):
            raise ValueError("adjacency shape does not match num_nodes")
        self.adjacency.validate(symmetric=True)


@dataclass
class Dataset:
    name: str
    graph: Graph
    features: "np.ndarray | CSRMatrix"
    labels: np.ndarray
    num_classes: int
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def with_split(self, train_mask, val_mask, test_mask) -> "Dataset":
        return Dataset(
            self.name,
            self.graph,
            self.features,
            self.labels,
            self.num_classes,
            np.asarray(train_mask, dtype=bool),
            np.asarray(val_mask, dtype=bool),
            np.asarray(test_mask, dtype=bool),
        )

    def validate(self) -> None:
        self.graph.validate()
        n = self.num_nodes
        if self.features.shape[0] != n:
            raise ValueError("feature rows do not match num_nodes")
        if self.num_features < 1:
            raise ValueError("need at least one feature column")
        if self.num_classes < 2:
            raise ValueError("need at least two classes")
        if self.labels.shape != (n,):
            raise ValueError("labels length does not match num_nodes")
        valid = (self.labels == UNLABELED) | (
            (self.labels >= 0) & (self.labels < self.num_classes)
        )
        if not valid.all():
            raise ValueError("labels must lie in [0, num_classes) or be unlabeled")
        for mask, name in (
            (self.train_mask, "train"),
            (self.val_mask, "val"),
            (self.test_mask, "test"),
        ):
            if mask.shape != (n,) or mask.dtype != np.bool_:
                raise ValueError(f"{name} mask must be a boolean vector of length {n}")
        overlap = (
            (self.train_mask & self.val_mask)
            | (self.train_mask & self.test_mask)
            | (self.val_mask & self.test_mask)
        )
        if overlap.any():
            raise ValueError("train/val/test masks overlap")
        evaluated = self.train_mask | self.val_mask | self.test_mask
        if (self.labels[evaluated] == UNLABELED).any():
            raise ValueError("split includes an unlabeled node")
        if isinstance(self.features, CSRMatrix):
            self.features.validate()
        elif not np.isfinite(self.features).all():
            raise ValueError("features contain non-finite values")

    def equals(self, other: "Dataset") -> bool:
        if (
            self.name != other.name
            or self.num_classes != other.num_classes
            or self.graph.num_nodes != other.graph.num_nodes
            or not self.graph.adjacency.equals(other.graph.adjacency)
            or not np.array_equal(self.labels, other.labels)
            or not np.array_equal(self.train_mask, other.train_mask)
            or not np.array_equal(self.val_mask, other.val_mask)
            or not np.array_equal(self.test_mask, other.test_mask)
        ):
            return False
        a, b = self.features, other.features
        if isinstance(a, CSRMatrix) != isinstance(b, CSRMatrix):
            return False
        if isinstance(a, CSRMatrix):
            return a.equals(b)
        return a.shape == b.shape and np.array_equal(a, b)


@dataclass
class SplitSpec:
    per_class_train: int
    num_val: int
    test: "int | str" = "remaining"
    seed: int = 0

    def __post_init__(self):
        if self.per_class_train < 1:
            raise ValueError("per_class_train must be >= 1")
        if self.num_val < 0:
            raise ValueError("num_val must be >= 0")
        if isinstance(self.test, str) and self.test != "remaining":
            raise ValueError('test must be a count or "remaining"')


@dataclass
class SignedEdgeList:
    """Canonical signed edges: src < dst, unique pairs, self loops removed."""

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    def __len__(self) -> int:
        return int(self.src.shape[0])

    @staticmethod
    def from_raw(src, dst, weight, num_nodes: "int | None" = None):
        """Canonicalize raw directed/duplicated edges.

        Unordered duplicates are merged with their weights averaged; self
        loops are dropped. Returns (edges, stats dict).
        """
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weight = np.asarray(weight, dtype=np.float64)
        if src.shape[0] == 0:
            raise ValueError("empty edge list")
        if src.min() < 0 or dst.min() < 0:
            raise ValueError("negative node id")
        keep = src != dst
        dropped_self = int((~keep).sum())
        src, dst, weight = src[keep], dst[keep], weight[keep]
        if src.shape[0] == 0:
            raise ValueError("empty edge list after dropping self loops")
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        order = np.lexsort((hi, lo))
        lo, hi, weight = lo[order], hi[order], weight[order]
        new_pair = np.ones(lo.shape[0], dtype=bool)
        new_pair[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
        group = np.cumsum(new_pair) - 1
        n_groups = int(group[-1]) + 1
        sums = np.zeros(n_groups)
        np.add.at(sums, group, weight)
        counts = np.bincount(group, minlength=n_groups)
        merged = int(lo.shape[0] - n_groups)
        u_lo = lo[new_pair]
        u_hi = hi[new_pair]
        if num_nodes is None:
            num_nodes = int(u_hi.max()) + 1
        elif u_hi.max() >= num_nodes:
            raise ValueError("node id out of range")
        edges = SignedEdgeList(int(num_nodes), u_lo, u_hi, sums / counts)
        stats = {"merged_duplicates": merged, "dropped_self_loops": dropped_self}
        return edges, stats


def normalize_adjacency(graph: Graph) -> CSRMatrix:
    """Symmetric renormalization with self loops added to every node.

    Values are v * (s_i * s_j) with s = degree(A+I)^(-1/2); the inner
    product is grouped so (i,j) and (j,i) come out bit-identical.
    """
    a = graph.adjacency
    n = graph.num_nodes
    row_ids = np.repeat(np.arange(n, dtype=np.int64), np.diff(a.indptr))
    diag = np.arange(n, dtype=np.int64)
    rows = np.concatenate([row_ids, diag])
    cols = np.concatenate([a.indices, diag])
    vals = np.concatenate([a.values, np.ones(n)])
    a_hat = CSRMatrix.from_coo(rows, cols, vals, (n, n), duplicates="sum")
    deg = np.zeros(n)
    np.add.at(deg, np.repeat(np.arange(n, dtype=np.int64), np.diff(a_hat.indptr)), a_hat.values)
    inv_sqrt = 1.0 / np.sqrt(deg)
    out_rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(a_hat.indptr))
    scale = inv_sqrt[out_rows] * inv_sqrt[a_hat.indices]
    return CSRMatrix((n, n), a_hat.indptr, a_hat.indices, a_hat.values * scale)


def random_split(dataset: Dataset, spec: SplitSpec):
    """Class-balanced train sample, then val/test from the remaining
    labeled nodes. Pure function of (dataset labels, spec)."""
    gen = Rng(spec.seed).derive("split")
    labels = dataset.labels
    n = dataset.num_nodes
    train_ids = []
    for c in range(dataset.num_classes):
        candidates = np.flatnonzero(labels == c)
        if candidates.shape[0] < spec.per_class_train:
            raise ValueError(
                f"class {c} has {candidates.shape[0]} labeled nodes, "
                f"need {spec.per_class_train}"
            )
        train_ids.append(gen.permutation(candidates)[: spec.per_class_train])
    train_ids = np.sort(np.concatenate(train_ids))
    train_mask = np.zeros(n, dtype=bool)
    train_mask[train_ids] = True

    pool = np.flatnonzero((labels != UNLABELED) & ~train_mask)
    pool = gen.permutation(pool)
    if pool.shape[0] < spec.num_val:
        raise ValueError(
            f"need {spec.num_val} validation nodes, only {pool.shape[0]} labeled left"
        )
    val_ids = pool[: spec.num_val]
    rest = pool[spec.num_val :]
    if spec.test == "remaining":
        test_ids = rest
    else:
        if rest.shape[0] < int(spec.test):
            raise ValueError(
                f"need {spec.test} test nodes, only {rest.shape[0]} labeled left"
            )
        test_ids = rest[: int(spec.test)]
    val_mask = np.zeros(n, dtype=bool)
    val_mask[val_ids] = True
    test_mask = np.zeros(n, dtype=bool)
    test_mask[test_ids] = True
    return train_mask, val_mask, test_mask


def dualize(
    edges: SignedEdgeList,
    pos_threshold: float,
    neg_threshold: float,
    name: str = "",
) -> Dataset:
    """Line-graph dataset for link classification.

    One node per original edge; dual nodes adjacent when the edges share
    an endpoint; features are two-hot endpoint indicators over the
    original vertex set; labels from thresholded weights (class 1 above
    pos_threshold, class 0 below neg_threshold, unlabeled between).
    """
    if neg_threshold >= pos_threshold:
        raise ValueError("neg_threshold must be below pos_threshold")
    m = len(edges)
    if m == 0:
        raise ValueError("empty edge list")

    labels = np.full(m, UNLABELED, dtype=np.int64)
    labels[edges.weight > pos_threshold] = 1
    labels[edges.weight < neg_threshold] = 0

    indices = np.empty(2 * m, dtype=np.int64)
    indices[0::2] = edges.src
    indices[1::2] = edges.dst
    features = CSRMatrix(
        (m, edges.num_nodes),
        np.arange(0, 2 * m + 1, 2, dtype=np.int64),
        indices,
        np.ones(2 * m),
    )

    endpoint_nodes = np.concatenate([edges.src, edges.dst])
    endpoint_edges = np.concatenate([np.arange(m, dtype=np.int64)] * 2)
    order = np.lexsort((endpoint_edges, endpoint_nodes))
    nodes_sorted = endpoint_nodes[order]
    eids_sorted = endpoint_edges[order]
    boundaries = np.flatnonzero(nodes_sorted[1:] != nodes_sorted[:-1]) + 1
    starts = np.concatenate([[0], boundaries])
    stops = np.concatenate([boundaries, [2 * m]])
    pair_src, pair_dst = [], []
    for a, b in zip(starts, stops):
        g = b - a
        if g < 2:
            continue
        ids = eids_sorted[a:b]
        r, c = np.triu_indices(g, 1)
        pair_src.append(ids[r])
        pair_dst.append(ids[c])
    if pair_src:
        graph = Graph.from_edges(
            m, np.concatenate(pair_src), np.concatenate(pair_dst)
        )
    else:
        graph = Graph(m, CSRMatrix.from_coo([], [], [], (m, m)))

    empty = np.zeros(m, dtype=bool)
    return Dataset(name, graph, features, labels, 2, empty, empty.copy(), empty.copy())


def l1_normalize_rows(features):
    """Scale each row to unit L1 norm; all-zero rows are left alone."""
    if isinstance(features, CSRMatrix):
        sums = np.zeros(features.shape[0])
        row_ids = np.repeat(
            np.arange(features.shape[0], dtype=np.int64), np.diff(features.indptr)
        )
        np.add.at(sums, row_ids, np.abs(features.values))
        scale = np.where(sums > 0, 1.0 / np.where(sums > 0, sums, 1.0), 1.0)
        return features.scale_values(scale[row_ids])
    sums = np.abs(features).sum(axis=1, keepdims=True)
    return features / np.where(sums > 0, sums, 1.0)


def _parse_csv(path: str, n_fields: int, converters) -> list:
    rows = []
    fname = os.path.basename(path)
    if not os.path.exists(path):
        raise DataFormatError(f"{fname}: file not found under {os.path.dirname(path)}")
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != n_fields:
                raise DataFormatError(
                    f"{fname}:{lineno}: expected {n_fields} fields, got {len(parts)}"
                )
            try:
                rows.append(tuple(conv(p) for conv, p in zip(converters, parts)))
            except ValueError:
                raise DataFormatError(f"{fname}:{lineno}: cannot parse {line!r}") from None
    return rows


def _mask_from_ids(ids, n: int, path: str, key: str) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    fname = os.path.basename(path)
    for record, i in enumerate(ids):
        if not isinstance(i, int) or not (0 <= i < n):
            raise DataFormatError(f"{fname}: {key}[{record}]: bad node id {i!r}")
        if mask[i]:
            raise DataFormatError(f"{fname}: {key}[{record}]: duplicate node id {i}")
        mask[i] = True
    return mask


def list_splits(path: str) -> list:
    split_dir = os.path.join(path, "splits")
    if not os.path.isdir(split_dir):
        return []
    return sorted(
        os.path.splitext(f)[0] for f in os.listdir(split_dir) if f.endswith(".json")
    )


def load_split(path: str, split: str, num_nodes: int):
    split_path = os.path.join(path, "splits", f"{split}.json")
    if not os.path.exists(split_path):
        raise DataFormatError(f"split file not found: {split_path}")
    with open(split_path, encoding="utf-8") as f:
        try:
            spec = json.load(f)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"{split}.json: invalid JSON ({e})") from None
    masks = []
    for key in ("train", "val", "test"):
        if key not in spec or not isinstance(spec[key], list):
            raise DataFormatError(f"{split}.json: missing list field {key!r}")
        masks.append(_mask_from_ids(spec[key], num_nodes, split_path, key))
    return tuple(masks)


def save_split(path: str, split: str, train_mask, val_mask, test_mask) -> str:
    split_dir = os.path.join(path, "splits")
    os.makedirs(split_dir, exist_ok=True)
    out = os.path.join(split_dir, f"{split}.json")
    doc = {
        "train": [int(i) for i in np.flatnonzero(train_mask)],
        "val": [int(i) for i in np.flatnonzero(val_mask)],
        "test": [int(i) for i in np.flatnonzero(test_mask)],
    }
    with open(out, "w", encoding="utf-8") as f:
        json.dump(doc, f)
        f.write("\n")
    return out


def load_dataset(
    path: str,
    split: "str | None" = None,
    normalize_features: bool = True,
    features: str = "auto",
) -> Dataset:
    """Read a canonical dataset directory.

    split picks splits/<split>.json (None leaves the masks empty).
    features chooses the in-memory representation: "auto" keeps matrices
    below the density cutoff sparse, "dense"/"sparse" force it.
    """
    if features not in ("auto", "dense", "sparse"):
        raise ValueError('features must be "auto", "dense", or "sparse"')
    meta_path = os.path.join(path, "meta.json")
    if not os.path.exists(meta_path):
        raise DataFormatError(f"meta.json not found under {path}")
    with open(meta_path, encoding="utf-8") as f:
        try:
            meta = json.load(f)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"meta.json: invalid JSON ({e})") from None
    for key in ("name", "num_nodes", "num_features", "num_classes"):
        if key not in meta:
            raise DataFormatError(f"meta.json: missing field {key!r}")
    n = int(meta["num_nodes"])
    d = int(meta["num_features"])
    c = int(meta["num_classes"])

    triplets = _parse_csv(
        os.path.join(path, "features.csv"), 3, (int, int, float)
    )
    if triplets:
        rows = np.array([t[0] for t in triplets], dtype=np.int64)
        cols = np.array([t[1] for t in triplets], dtype=np.int64)
        vals = np.array([t[2] for t in triplets], dtype=np.float64)
        if rows.min() < 0 or rows.max() >= n:
            raise DataFormatError("features.csv: row index out of range")
        if cols.min() < 0 or cols.max() >= d:
            raise DataFormatError("features.csv: column index out of range")
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    try:
        x = CSRMatrix.from_coo(rows, cols, vals, (n, d), duplicates="error")
    except ValueError as e:
        raise DataFormatError(f"features.csv: {e}") from None
    density = x.nnz / (n * d)
    if features == "dense" or (features == "auto" and density >= SPARSE_DENSITY_CUTOFF):
        x = x.to_dense()
    if normalize_features:
        x = l1_normalize_rows(x)

    labels = np.full(n, UNLABELED, dtype=np.int64)
    lab_path = os.path.join(path, "labels.csv")
    for record, (node, lab) in enumerate(_parse_csv(lab_path, 2, (int, int)), 1):
        if not (0 <= node < n):
            raise DataFormatError(f"labels.csv: record {record}: node {node} out of range")
        if not (0 <= lab < c):
            raise DataFormatError(f"labels.csv: record {record}: label {lab} out of range")
        if labels[node] != UNLABELED:
            raise DataFormatError(f"labels.csv: record {record}: duplicate node {node}")
        labels[node] = lab

    edge_rows = _parse_csv(os.path.join(path, "edges.csv"), 2, (int, int))
    src = np.array([e[0] for e in edge_rows], dtype=np.int64)
    dst = np.array([e[1] for e in edge_rows], dtype=np.int64)
    if edge_rows:
        if src.min() < 0 or dst.max() >= n:
            raise DataFormatError("edges.csv: node id out of range")
        if (src >= dst).any():
            bad = int(np.flatnonzero(src >= dst)[0]) + 1
            raise DataFormatError(f"edges.csv: record {bad}: requires src < dst")
    try:
        graph = Graph.from_edges(n, src, dst)
    except ValueError as e:
        raise DataFormatError(f"edges.csv: {e}") from None

    if split is not None:
        train_mask, val_mask, test_mask = load_split(path, split, n)
    else:
        train_mask = np.zeros(n, dtype=bool)
        val_mask = np.zeros(n, dtype=bool)
        test_mask = np.zeros(n, dtype=bool)

    ds = Dataset(
        str(meta["name"]), graph, x, labels, c, train_mask, val_mask, test_mask
    )
    try:
        ds.validate()
    except ValueError as e:
        raise DataFormatError(f"{path}: {e}") from None
    return ds


def save_dataset(dataset: Dataset, path: str, split: "str | None" = None) -> None:
    """Write the canonical directory; optionally also the current masks
    as splits/<split>.json."""
    dataset.validate()
    os.makedirs(path, exist_ok=True)
    meta = {
        "name": dataset.name,
        "num_nodes": dataset.num_nodes,
        "num_features": dataset.num_features,
        "num_classes": dataset.num_classes,
    }
    with open(os.path.join(path, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")

    x = dataset.features
    if isinstance(x, CSRMatrix):
        row_ids = np.repeat(
            np.arange(x.shape[0], dtype=np.int64), np.diff(x.indptr)
        )
        cols, vals = x.indices, x.values
    else:
        row_ids, cols = np.nonzero(x)
        vals = x[row_ids, cols]
    with open(os.path.join(path, "features.csv"), "w", encoding="utf-8") as f:
        for r, c_, v in zip(row_ids, cols, vals):
            f.write(f"{r},{c_},{float(v)!r}\n")

    with open(os.path.join(path, "labels.csv"), "w", encoding="utf-8") as f:
        for node in np.flatnonzero(dataset.labels != UNLABELED):
            f.write(f"{node},{dataset.labels[node]}\n")

    src, dst = dataset.graph.undirected_edge_array()
    with open(os.path.join(path, "edges.csv"), "w", encoding="utf-8") as f:
        for s, d_ in zip(src, dst):
            f.write(f"{s},{d_}\n")

    if split is not None:
        save_split(path, split, dataset.train_mask, dataset.val_mask, dataset.test_mask)


def load_signed_edges(path: str, num_nodes: "int | None" = None):
    """Parse a signed edge CSV ("src,dst,weight") and canonicalize it.
    Returns (SignedEdgeList, stats)."""
    rows = _parse_csv(path, 3, (int, int, float))
    if not rows:
        raise DataFormatError(f"{os.path.basename(path)}: no edges")
    src = np.array([r[0] for r in rows], dtype=np.int64)
    dst = np.array([r[1] for r in rows], dtype=np.int64)
    weight = np.array([r[2] for r in rows], dtype=np.float64)
    try:
        return SignedEdgeList.from_raw(src, dst, weight, num_nodes)
    except ValueError as e:
        raise DataFormatError(f"{os.path.basename(path)}: {e}") from None
