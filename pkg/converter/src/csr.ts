import { CSRMatrix, NDArray } from "./pickle.js";

export interface Triplet {
  row: number;
  col: number;
  value: number;
}

export function csrRows(m: CSRMatrix): number {
  return m.shape[0];
}

/** Non-zero triplets in row-major order. Zeros stored explicitly are kept. */
export function csrTriplets(m: CSRMatrix, rowOffset = 0): Triplet[] {
  const out: Triplet[] = [];
  const indptr = m.indptr.data;
  const indices = m.indices.data;
  const data = m.data.data;
  for (let r = 0; r < m.shape[0]; r++) {
    for (let k = indptr[r]; k < indptr[r + 1]; k++) {
      out.push({ row: r + rowOffset, col: indices[k], value: data[k] });
    }
  }
  return out;
}

/** Directed (row, col) pairs of a CSR adjacency, values ignored. */
export function csrPairs(m: CSRMatrix): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  const indptr = m.indptr.data;
  const indices = m.indices.data;
  for (let r = 0; r < m.shape[0]; r++) {
    for (let k = indptr[r]; k < indptr[r + 1]; k++) out.push([r, indices[k]]);
  }
  return out;
}

export function csrFromParts(
  shape: [number, number],
  data: NDArray,
  indices: NDArray,
  indptr: NDArray
): CSRMatrix {
  if (indptr.data.length !== shape[0] + 1)
    throw new Error(`csr indptr has ${indptr.data.length} entries for ${shape[0]} rows`);
  return { kind: "csr", shape, data, indices, indptr };
}

/** Deduped undirected pairs (a < b); self loops dropped. */
export function undirectedPairs(pairs: Iterable<[number, number]>): Array<[number, number]> {
  const seen = new Set<number>();
  const out: Array<[number, number]> = [];
  for (const [s, d] of pairs) {
    if (s === d) continue;
    const a = Math.min(s, d);
    const b = Math.max(s, d);
    const key = a * 0x40000000 + b; // node ids stay far below 2^30
    if (seen.has(key)) continue;
    seen.add(key);
    out.push([a, b]);
  }
  out.sort((p, q) => p[0] - q[0] || p[1] - q[1]);
  return out;
}

export function matrixRow(a: NDArray, r: number): Float64Array {
  if (a.shape.length !== 2) throw new Error("expected a 2-d array");
  const cols = a.shape[1];
  return a.data.subarray(r * cols, (r + 1) * cols);
}

/** One-hot row decode: argmax index, or null for an all-zero row. */
export function rowLabel(a: NDArray, r: number): number | null {
  const row = matrixRow(a, r);
  let best = -1;
  let bestV = 0;
  for (let j = 0; j < row.length; j++) {
    if (row[j] > bestV) {
      bestV = row[j];
      best = j;
    }
  }
  return best < 0 ? null : best;
}
