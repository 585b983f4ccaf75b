#!/usr/bin/env python3
"""Build the tiny raw-format fixtures for the converter test suite.

Writes miniature versions of each upstream format (pickled sparse
matrices and graph dicts, an npz archive, a signed edge CSV) plus an
expected.json computed here with plain numpy, so the converter tests
compare against independently derived values. Deterministic output;
rerunning must not change any fixture.
"""

import json
import os
import pickle
import sys
from collections import defaultdict

import numpy as np
from scipy import sparse


OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "converter", "tests", "fixtures")


def write_pickle(path, obj):
    with open(path, "wb") as f:
        pickle.dump(obj, f, protocol=2)


def undirected_pairs(pairs):
    seen = set()
    for a, b in pairs:
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        seen.add(key)
    return sorted(seen)


def planetoid_fixture(out, name, n, f, c, train, val, test_index, gaps=()):
    """Fake planetoid split: allx covers [0, n - span), tx covers the test
    range. gaps lists test-range positions with no tx row (isolated nodes)."""
    rng = np.random.default_rng(42 if name == "tinycora" else 43)
    lo = min(test_index + list(gaps))
    span = n - lo
    n_all = lo

    def feats(rows, seed_shift):
        m = sparse.random(
            rows, f, density=0.4, format="csr", dtype=np.float32,
            random_state=np.random.RandomState(7 + seed_shift),
        )
        m.data = np.round(m.data * 4, 3).astype(np.float32) + np.float32(0.125)
        return m

    def one_hot(labels):
        out_m = np.zeros((len(labels), c), dtype=np.int32)
        for i, y in enumerate(labels):
            if y >= 0:
                out_m[i, y] = 1
        return out_m

    all_labels = [int(v) for v in rng.integers(0, c, size=n)]
    unlabeled = train + val + 1  # one pool node past the evaluated ranges
    all_labels[unlabeled] = -1
    for pos in gaps:
        all_labels[pos] = -1

    x = feats(train, 0)
    y = one_hot(all_labels[:train])
    allx = feats(n_all, 1)
    ally = one_hot(all_labels[:n_all])
    tx = feats(len(test_index), 2)
    ty = one_hot([all_labels[i] for i in sorted(test_index)])

    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.3:
                edges.add((i, j))
    graph = defaultdict(list)
    for a, b in sorted(edges):
        graph[a].append(b)
        graph[b].append(a)
    graph[0].append(0)              # self loop, must be dropped
    if graph[0]:
        graph[0].append(graph[0][0])  # duplicate entry, must be deduped
    for i in range(n):
        graph[i]                    # touch every node so the dict covers [0, n)

    base = os.path.join(out, name)
    os.makedirs(base, exist_ok=True)
    write_pickle(os.path.join(base, f"ind.{name}.x"), x)
    write_pickle(os.path.join(base, f"ind.{name}.y"), y)
    write_pickle(os.path.join(base, f"ind.{name}.tx"), tx)
    write_pickle(os.path.join(base, f"ind.{name}.ty"), ty)
    write_pickle(os.path.join(base, f"ind.{name}.allx"), allx)
    write_pickle(os.path.join(base, f"ind.{name}.ally"), ally)
    write_pickle(os.path.join(base, f"ind.{name}.graph"), dict(graph))
    with open(os.path.join(base, f"ind.{name}.test.index"), "w") as fh:
        for i in test_index:
            fh.write(f"{i}\n")

    # expected canonical content, derived with plain array ops
    full = np.zeros((n, f))
    full[:n_all] = allx.toarray()
    for row, node in enumerate(sorted(test_index)):
        full[node] = tx.toarray()[row]
    triplets = [
        [i, j, float(full[i, j])]
        for i in range(n)
        for j in range(f)
        if full[i, j] != 0.0
    ]
    labels = {str(i): all_labels[i] for i in range(n) if all_labels[i] >= 0}
    pairs = undirected_pairs(
        (a, b) for a, nbrs in graph.items() for b in nbrs
    )
    return {
        "dir": name,
        "name": name,
        "counts": {
            "nodes": n,
            "edges": len(pairs),
            "features": f,
            "classes": c,
            "train": train,
            "val": val,
            "test": len(test_index),
        },
        "features": triplets,
        "labels": labels,
        "edges": [list(p) for p in pairs],
        "split": {
            "train": list(range(train)),
            "val": list(range(train, train + val)),
            "test": sorted(test_index),
        },
    }


def npz_fixture(out):
    rng = np.random.default_rng(5)
    sizes = {0: 120, 1: 40, 2: 30}
    n = sum(sizes.values())
    f = 9
    labels = np.concatenate([np.full(k, c_) for c_, k in sizes.items()]).astype(np.int64)

    attr = sparse.random(
        n, f, density=0.3, format="csr", dtype=np.float64,
        random_state=np.random.RandomState(11),
    )
    attr.data = np.round(attr.data, 4) + 0.5

    directed = set()
    while len(directed) < 400:
        a = int(rng.integers(0, n))
        b = int(rng.integers(0, n))
        if a != b:
            directed.add((a, b))
    directed = sorted(directed)
    src = np.array([a for a, _ in directed], dtype=np.int64)
    dst = np.array([b for _, b in directed], dtype=np.int64)
    adj = sparse.csr_matrix((np.ones(len(directed)), (src, dst)), shape=(n, n))

    os.makedirs(out, exist_ok=True)
    np.savez_compressed(
        os.path.join(out, "tinybench.npz"),
        adj_data=adj.data,
        adj_indices=adj.indices.astype(np.int32),
        adj_indptr=adj.indptr.astype(np.int32),
        adj_shape=np.array(adj.shape, dtype=np.int64),
        attr_data=attr.data,
        attr_indices=attr.indices.astype(np.int32),
        attr_indptr=attr.indptr.astype(np.int32),
        attr_shape=np.array(attr.shape, dtype=np.int64),
        labels=labels,
        class_names=np.array(["a", "b", "c"], dtype=object),
    )

    pairs = undirected_pairs(directed)
    dense_attr = attr.toarray()
    triplets = [
        [i, j, float(dense_attr[i, j])]
        for i in range(n)
        for j in range(f)
        if dense_attr[i, j] != 0.0
    ]

    filtered_keep = [i for i in range(n) if sizes[int(labels[i])] >= 35]
    remap = {old: new for new, old in enumerate(filtered_keep)}
    filtered_pairs = [
        [remap[a], remap[b]] for a, b in pairs if a in remap and b in remap
    ]
    return {
        "file": "tinybench.npz",
        "counts": {"nodes": n, "edges": len(pairs), "features": f, "classes": 3},
        "features": triplets,
        "labels": [int(v) for v in labels],
        "edges": [list(p) for p in pairs],
        "class_sizes": sizes,
        "split_rule": {"big_train": 20, "big_val": 30, "small_train_frac": 0.2, "small_val_frac": 0.3},
        "filtered_min35": {
            "nodes": len(filtered_keep),
            "classes": 2,
            "edges": len(filtered_pairs),
            "kept": filtered_keep,
        },
    }


def signed_fixture(out):
    rows = [
        (7, 2, 10, 1289241911),
        (2, 7, 4, 1289241941),   # reverse duplicate of (7, 2)
        (5, 2, -10, 1289243140),
        (70, 5, 1, 1289245277),
        (7, 70, -6, 1289254254),
        (2, 5, -8, 1289254300),  # reverse duplicate of (5, 2)
        (5, 70, 2, 1289254395),
    ]
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "tinysigned.csv"), "w") as f:
        for r in rows:
            f.write(",".join(str(v) for v in r) + "\n")
    ids = sorted({r[0] for r in rows} | {r[1] for r in rows})
    dense = {v: i for i, v in enumerate(ids)}
    out_rows = [[dense[a], dense[b], float(w)] for a, b, w, _ in rows]
    pair_counts = defaultdict(int)
    for a, b, _, _ in rows:
        pair_counts[(min(a, b), max(a, b))] += 1
    duplicates = sum(v - 1 for v in pair_counts.values())
    return {
        "file": "tinysigned.csv",
        "counts": {"nodes": len(ids), "edges": len(rows)},
        "rows": out_rows,
        "duplicate_pairs": duplicates,
    }


def pickle_probe_fixtures(out):
    """Small pickles exercising each decoder path, with golden values."""
    base = os.path.join(out, "pickles")
    os.makedirs(base, exist_ok=True)
    golden = {}

    arr_i4 = np.array([[1, -2], [300, 70000]], dtype=np.int32)
    write_pickle(os.path.join(base, "int32.pkl"), arr_i4)
    golden["int32.pkl"] = {"shape": [2, 2], "dtype": "int32", "values": arr_i4.ravel().tolist()}

    arr_f4 = np.array([0.125, -1.5, 3.25], dtype=np.float32)
    write_pickle(os.path.join(base, "float32.pkl"), arr_f4)
    golden["float32.pkl"] = {"shape": [3], "dtype": "float32", "values": [float(v) for v in arr_f4]}

    arr_f8 = np.linspace(-1.0, 1.0, 5)
    write_pickle(os.path.join(base, "float64.pkl"), arr_f8)
    golden["float64.pkl"] = {"shape": [5], "dtype": "float64", "values": arr_f8.tolist()}

    csr = sparse.csr_matrix(
        (np.array([1.5, 2.5, 3.5], dtype=np.float32),
         np.array([0, 2, 1], dtype=np.int32),
         np.array([0, 2, 2, 3], dtype=np.int32)),
        shape=(3, 3),
    )
    write_pickle(os.path.join(base, "csr.pkl"), csr)
    golden["csr.pkl"] = {
        "shape": [3, 3],
        "data": [1.5, 2.5, 3.5],
        "indices": [0, 2, 1],
        "indptr": [0, 2, 2, 3],
    }

    graph = defaultdict(list, {0: [1, 2], 1: [0], 2: [0], 3: []})
    write_pickle(os.path.join(base, "graph.pkl"), graph)
    golden["graph.pkl"] = {str(k): v for k, v in graph.items()}

    write_pickle(
        os.path.join(base, "misc.pkl"),
        {"name": "probe", "flag": True, "nothing": None, "pi": 3.14159, "big": 2**40, "seq": [1, (2, 3)]},
    )
    golden["misc.pkl"] = {"big": 2**40, "pi": 3.14159}
    return golden


def main() -> int:
    os.makedirs(OUT, exist_ok=True)
    expected = {
        "planetoid": [
            planetoid_fixture(OUT, "tinycora", n=12, f=6, c=3, train=3, val=2, test_index=[9, 10, 11]),
            planetoid_fixture(OUT, "tinygap", n=12, f=5, c=3, train=3, val=2, test_index=[9, 11], gaps=(10,)),
        ],
        "npz": npz_fixture(OUT),
        "signed": signed_fixture(OUT),
        "pickles": pickle_probe_fixtures(OUT),
    }
    with open(os.path.join(OUT, "expected.json"), "w") as f:
        json.dump(expected, f, indent=1, sort_keys=True)
        f.write("\n")
    print(os.path.abspath(OUT))
    return 0


if __name__ == "__main__":
    sys.exit(main())
