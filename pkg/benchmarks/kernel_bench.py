#!/usr/bin/env python3
"""Time the jitted sparse kernel against the pure-numpy fallback.

Both backends compute CSR @ dense with a fixed per-row reduction order;
this script reports per-call wall time for the raw kernel and for a full
eval-mode forward pass, plus the max elementwise deviation between the
two kernel implementations.

Usage: python3 benchmarks/kernel_bench.py [--nodes 20000] [--repeats 20]
"""

import argparse
import os
import statistics
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from graphmix import kernels
from graphmix.graphdata import normalize_adjacency
from graphmix.model import ModelParams, gcn_forward
from graphmix.rng import Rng
from graphmix.synthetic import make_synthetic


def timeit(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return min(samples), statistics.median(samples)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=20000)
    parser.add_argument("--features", type=int, default=128)
    parser.add_argument("--hidden", type=int, default=16)
    parser.add_argument("--avg-degree", type=float, default=4.0)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    n = args.nodes
    ds = make_synthetic(
        num_nodes=n,
        num_classes=5,
        num_features=args.features,
        p_in=args.avg_degree / n,
        p_out=args.avg_degree / (4.0 * n),
        seed=1,
        name="bench",
    )
    a_hat = normalize_adjacency(ds.graph)
    dense = Rng(2).derive("bench").standard_normal((n, args.hidden))
    csr_args = (a_hat.indptr, a_hat.indices, a_hat.values, dense)

    print(f"graph: {n} nodes, {a_hat.nnz} nonzeros, dense operand {n}x{args.hidden}")
    print(f"active backend: {kernels.active_backend()}")
    print()

    rows = []
    ref = kernels.spmm_numpy(*csr_args)
    best, med = timeit(lambda: kernels.spmm_numpy(*csr_args), args.repeats)
    rows.append(("spmm", "numpy", best, med))

    if kernels.spmm_numba is not None:
        kernels.spmm_numba(*csr_args)  # compile outside the timed region
        out = kernels.spmm_numba(*csr_args)
        dev = float(np.abs(out - ref).max())
        best_nb, med_nb = timeit(lambda: kernels.spmm_numba(*csr_args), args.repeats)
        rows.append(("spmm", "numba", best_nb, med_nb))
        print(f"max |numba - numpy| on spmm output: {dev:.3e}")
    else:
        print("numba unavailable; timing the fallback only")

    params = ModelParams.init(args.features, args.hidden, ds.num_classes, Rng(3))
    fwd = lambda: gcn_forward(params, a_hat, ds.features, 0.0, 0.0, None, train=False)
    fwd()
    best_f, med_f = timeit(fwd, max(3, args.repeats // 4))
    rows.append(("gcn_forward(eval)", kernels.active_backend(), best_f, med_f))

    print()
    print(f"{'op':<18} {'backend':<8} {'best ms':>10} {'median ms':>10}")
    for op, backend, best_s, med_s in rows:
        print(f"{op:<18} {backend:<8} {best_s * 1e3:>10.3f} {med_s * 1e3:>10.3f}")
    if len(rows) == 3:
        print()
        print(f"spmm speedup (numba over numpy, best): {rows[0][2] / rows[1][2]:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
