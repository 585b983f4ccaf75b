/**
 * Converter for the pickled citation benchmark layout:
 *
 *   ind.<name>.x          CSR float features of the labeled training nodes
 *   ind.<name>.y          one-hot int labels for those nodes
 *   ind.<name>.allx       CSR features of nodes [0, n_pool): train + pool
 *   ind.<name>.ally       one-hot labels over the same range
 *   ind.<name>.tx / .ty   features / labels of the held-out test nodes
 *   ind.<name>.test.index node id per tx row, one per line, shuffled
 *   ind.<name>.graph      dict node -> neighbor list
 *
 * Node ids [0, n_pool) are the allx rows; test ids continue from n_pool.
 * Some test ranges have holes (isolated nodes never listed in test.index):
 * those nodes get zero feature rows, stay unlabeled, and are excluded from
 * the test split, matching how the files are consumed in the literature.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { loads, CSRMatrix, NDArray, PyValue } from "./pickle.js";
import { csrTriplets, rowLabel, undirectedPairs, Triplet } from "./csr.js";
import { CanonicalDataset } from "./canonical.js";

export interface PlanetoidOptions {
  valSize?: number;
}

function loadPickle(dir: string, name: string, part: string): PyValue {
  const p = path.join(dir, `ind.${name}.${part}`);
  if (!fs.existsSync(p)) throw new Error(`missing input file ${p}`);
  return loads(fs.readFileSync(p));
}

function asCSR(v: PyValue, what: string): CSRMatrix {
  if (!v || (v as CSRMatrix).kind !== "csr")
    throw new Error(`${what} is not a CSR matrix`);
  return v as CSRMatrix;
}

function asArray(v: PyValue, what: string): NDArray {
  if (!v || (v as NDArray).kind !== "ndarray")
    throw new Error(`${what} is not an ndarray`);
  return v as NDArray;
}

function readTestIndex(dir: string, name: string): number[] {
  const p = path.join(dir, `ind.${name}.test.index`);
  if (!fs.existsSync(p)) throw new Error(`missing input file ${p}`);
  const out: number[] = [];
  for (const line of fs.readFileSync(p, "utf8").split("\n")) {
    const s = line.trim();
    if (!s) continue;
    const v = Number(s);
    if (!Number.isInteger(v) || v < 0) throw new Error(`bad test index line '${s}'`);
    out.push(v);
  }
  if (out.length === 0) throw new Error("test.index is empty");
  if (new Set(out).size !== out.length) throw new Error("test.index has duplicate ids");
  return out;
}

/** Infer <name> from the ind.<name>.x file in a directory. */
export function detectPlanetoidName(dir: string): string {
  const names = fs
    .readdirSync(dir)
    .map((f) => /^ind\.(.+)\.x$/.exec(f))
    .filter((m): m is RegExpExecArray => m !== null)
    .map((m) => m[1]);
  if (names.length !== 1)
    throw new Error(
      names.length === 0
        ? `no ind.<name>.x file under ${dir}`
        : `multiple datasets under ${dir}: ${names.join(", ")}`
    );
  return names[0];
}

export function convertPlanetoid(
  dir: string,
  name: string,
  opts: PlanetoidOptions = {}
): CanonicalDataset {
  const valSize = opts.valSize ?? 500;
  const x = asCSR(loadPickle(dir, name, "x"), "x");
  const y = asArray(loadPickle(dir, name, "y"), "y");
  const allx = asCSR(loadPickle(dir, name, "allx"), "allx");
  const ally = asArray(loadPickle(dir, name, "ally"), "ally");
  const tx = asCSR(loadPickle(dir, name, "tx"), "tx");
  const ty = asArray(loadPickle(dir, name, "ty"), "ty");
  const graph = loadPickle(dir, name, "graph");
  const testIndex = readTestIndex(dir, name);

  const nPool = allx.shape[0];
  const nTrain = y.shape[0];
  const numFeatures = allx.shape[1];
  const numClasses = y.shape[1];

  // structural cross-checks between the seven files
  if (x.shape[0] !== nTrain) throw new Error(`x has ${x.shape[0]} rows but y has ${nTrain}`);
  if (x.shape[1] !== numFeatures || tx.shape[1] !== numFeatures)
    throw new Error("feature widths disagree between x/allx/tx");
  if (ally.shape[0] !== nPool) throw new Error("ally rows do not match allx");
  if (ally.shape[1] !== numClasses || ty.shape[1] !== numClasses)
    throw new Error("class widths disagree between y/ally/ty");
  if (tx.shape[0] !== testIndex.length || ty.shape[0] !== testIndex.length)
    throw new Error(
      `test.index lists ${testIndex.length} ids but tx has ${tx.shape[0]} rows`
    );
  const minTest = Math.min(...testIndex);
  const maxTest = Math.max(...testIndex);
  if (minTest !== nPool)
    throw new Error(`test ids start at ${minTest}, expected ${nPool} (allx rows)`);
  const numNodes = maxTest + 1;
  if (nTrain + valSize > nPool)
    throw new Error(
      `validation size ${valSize} does not fit: ${nPool} pool rows, ${nTrain} train`
    );

  // features: allx rows keep their position, tx row i belongs to testIndex[i]
  const features: Triplet[] = csrTriplets(allx);
  const txTriplets = csrTriplets(tx);
  for (const t of txTriplets) features.push({ row: testIndex[t.row], col: t.col, value: t.value });

  // labels: one-hot rows decode by argmax; all-zero rows stay unlabeled
  const labels = new Map<number, number>();
  for (let r = 0; r < nPool; r++) {
    const l = rowLabel(ally, r);
    if (l !== null) labels.set(r, l);
  }
  for (let r = 0; r < testIndex.length; r++) {
    const l = rowLabel(ty, r);
    if (l !== null) labels.set(testIndex[r], l);
  }

  // edges from the neighbor dict; self loops and duplicates are dropped
  if (!(graph instanceof Map)) throw new Error("graph file is not a dict");
  const directed: Array<[number, number]> = [];
  for (const [k, neighbors] of graph) {
    if (typeof k !== "number" || !Number.isInteger(k) || k < 0 || k >= numNodes)
      throw new Error(`graph key ${String(k)} outside [0, ${numNodes})`);
    if (!Array.isArray(neighbors)) throw new Error(`graph[${k}] is not a list`);
    for (const nb of neighbors) {
      if (typeof nb !== "number" || !Number.isInteger(nb) || nb < 0 || nb >= numNodes)
        throw new Error(`graph[${k}] neighbor ${String(nb)} outside [0, ${numNodes})`);
      directed.push([k, nb]);
    }
  }
  const edges = undirectedPairs(directed);

  const train = Array.from({ length: nTrain }, (_, i) => i);
  const val = Array.from({ length: valSize }, (_, i) => nTrain + i);
  const test = [...testIndex].sort((a, b) => a - b);

  return {
    name,
    numNodes,
    numFeatures,
    numClasses,
    features,
    labels,
    edges,
    splits: { standard: { train, val, test } },
  };
}
