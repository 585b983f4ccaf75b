"""Minimal CSR matrix container shared by adjacency and sparse features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass
class CSRMatrix:
    """Compressed sparse row matrix with float64 values and sorted columns."""

    shape: tuple[int, int]
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    @staticmethod
    def from_coo(rows, cols, values, shape, duplicates: str = "error") -> "CSRMatrix":
        """Build a CSR matrix from triplets.

        ``duplicates`` controls repeated (row, col) pairs: ``error``, ``sum``
        or ``mean``.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        n_rows, n_cols = shape
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise ValueError("row index out of bounds")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("column index out of bounds")
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size:
            dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if dup.any():
                if duplicates == "error":
                    k = int(np.flatnonzero(dup)[0])
                    raise ValueError(
                        f"duplicate entry at ({rows[k]}, {cols[k]})"
                    )
                # segment-combine duplicates
                first = np.concatenate(([True], ~dup))
                seg = np.cumsum(first) - 1
                out_rows = rows[first]
                out_cols = cols[first]
                sums = np.zeros(out_rows.shape[0], dtype=np.float64)
                np.add.at(sums, seg, values)
                if duplicates == "mean":
                    counts = np.bincount(seg)
                    sums = sums / counts
                rows, cols, values = out_rows, out_cols, sums
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_rows), out=indptr[1:])
        return CSRMatrix((n_rows, n_cols), indptr, cols, values)

    @staticmethod
    def identity(n: int) -> "CSRMatrix":
        idx = np.arange(n, dtype=np.int64)
        return CSRMatrix(
            (n, n),
            np.arange(n + 1, dtype=np.int64),
            idx,
            np.ones(n, dtype=np.float64),
        )

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.float64)
        row_ids = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        out[row_ids, self.indices] = self.values
        return out

    def transpose(self) -> "CSRMatrix":
        n_rows, n_cols = self.shape
        row_ids = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(self.indptr))
        order = np.lexsort((row_ids, self.indices))
        indptr = np.zeros(n_cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.indices, minlength=n_cols), out=indptr[1:])
        return CSRMatrix((n_cols, n_rows), indptr, row_ids[order], self.values[order])

    def transpose_plan(self) -> "TransposePlan":
        n_rows, n_cols = self.shape
        row_ids = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(self.indptr))
        order = np.lexsort((row_ids, self.indices))
        indptr = np.zeros(n_cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.indices, minlength=n_cols), out=indptr[1:])
        return TransposePlan((n_cols, n_rows), indptr, row_ids[order], order)

    def take_rows(self, ids) -> "CSRMatrix":
        ids = np.asarray(ids, dtype=np.int64)
        lengths = self.indptr[ids + 1] - self.indptr[ids]
        indptr = np.zeros(ids.shape[0] + 1, dtype=np.int64)
        np.cumsum(lengths, out=indptr[1:])
        take = np.concatenate(
            [np.arange(self.indptr[i], self.indptr[i + 1]) for i in ids]
        ) if ids.size else np.empty(0, dtype=np.int64)
        return CSRMatrix(
            (ids.shape[0], self.shape[1]),
            indptr,
            self.indices[take],
            self.values[take],
        )

    def scale_values(self, factor: np.ndarray | float) -> "CSRMatrix":
        return CSRMatrix(self.shape, self.indptr, self.indices, self.values * factor)

    def matmul_dense(self, dense: np.ndarray) -> np.ndarray:
        if dense.shape[0] != self.shape[1]:
            raise ValueError(
                f"shape mismatch: {self.shape} @ {dense.shape}"
            )
        return kernels.spmm(self.indptr, self.indices, self.values, dense)

    def validate(self, symmetric: bool = False) -> None:
        n_rows, n_cols = self.shape
        if self.indptr.shape[0] != n_rows + 1 or self.indptr[0] != 0:
            raise ValueError("malformed indptr")
        if not (np.diff(self.indptr) >= 0).all() or self.indptr[-1] != self.nnz:
            raise ValueError("indptr not monotone / inconsistent with nnz")
        if self.nnz:
            if self.indices.min() < 0 or self.indices.max() >= n_cols:
                raise ValueError("column index out of bounds")
            for quantity, name in ((self.values, "values"),):
                if not np.isfinite(quantity).all():
                    raise ValueError(f"non-finite {name}")
            # strictly increasing columns within each row
            row_ids = np.repeat(np.arange(n_rows), np.diff(self.indptr))
            same_row = row_ids[1:] == row_ids[:-1]
            if (self.indices[1:][same_row] <= self.indices[:-1][same_row]).any():
                raise ValueError("columns not strictly increasing within a row")
        if symmetric:
            t = self.transpose()
            if (
                not np.array_equal(t.indptr, self.indptr)
                or not np.array_equal(t.indices, self.indices)
                or not np.array_equal(t.values, self.values)
            ):
                raise ValueError("matrix is not structurally symmetric")

    def equals(self, other: "CSRMatrix") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )


@dataclass
class TransposePlan:
    """Precomputed structure of a CSR transpose.

    apply(values) builds the transpose for any value vector sharing the
    source's sparsity pattern, so repeated transposed products (e.g. the
    backward pass through a dropped-out sparse feature matrix) skip the
    index sort.
    """

    shape: tuple[int, int]
    indptr: np.ndarray
    indices: np.ndarray
    value_order: np.ndarray

    def apply(self, values: np.ndarray) -> CSRMatrix:
        return CSRMatrix(self.shape, self.indptr, self.indices, values[self.value_order])
