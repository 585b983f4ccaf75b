/**
 * Converter for the compressed-archive benchmark format: one .npz holding
 * CSR adjacency (adj_*), CSR node attributes (attr_*), and integer labels.
 * Extra members (class names and similar metadata) are ignored.
 *
 * The stored adjacency is directed; the output graph is its symmetrized
 * form with each undirected edge kept once.  Classes below --min-class-size
 * are removed first (with their nodes), then node and class ids are
 * renumbered densely in their original order.
 *
 * There is no published split for these files, so split0..splitN-1 are
 * sampled per class: 20 train / 30 val for classes larger than 100 nodes,
 * floor(20%) / floor(30%) for smaller ones, remainder test.
 */

import * as fs from "node:fs";
import { NpzFile } from "./npy.js";
import { csrFromParts, csrTriplets, csrPairs, undirectedPairs, Triplet } from "./csr.js";
import { CanonicalDataset, SplitDef } from "./canonical.js";
import { Rng } from "./rng.js";

export interface NpzBenchOptions {
  minClassSize?: number;
  numSplits?: number;
  seed?: number;
}

const BIG_CLASS = 100;
const BIG_TRAIN = 20;
const BIG_VAL = 30;
const SMALL_TRAIN_FRAC = 0.2;
const SMALL_VAL_FRAC = 0.3;

function loadCsr(npz: NpzFile, prefix: string) {
  const shapeArr = npz.get(`${prefix}_shape`);
  if (shapeArr.data.length !== 2) throw new Error(`${prefix}_shape is not 2-d`);
  const shape: [number, number] = [shapeArr.data[0], shapeArr.data[1]];
  return csrFromParts(
    shape,
    npz.get(`${prefix}_data`),
    npz.get(`${prefix}_indices`),
    npz.get(`${prefix}_indptr`)
  );
}

export function sampleSplit(
  labels: number[],
  numClasses: number,
  rng: Rng
): SplitDef {
  const byClass: number[][] = Array.from({ length: numClasses }, () => []);
  labels.forEach((l, i) => byClass[l].push(i));
  const train: number[] = [];
  const val: number[] = [];
  const test: number[] = [];
  for (const members of byClass) {
    const ids = rng.shuffle([...members]);
    let nTrain: number;
    let nVal: number;
    if (ids.length > BIG_CLASS) {
      nTrain = BIG_TRAIN;
      nVal = BIG_VAL;
    } else {
      nTrain = Math.max(1, Math.floor(ids.length * SMALL_TRAIN_FRAC));
      nVal = Math.max(1, Math.floor(ids.length * SMALL_VAL_FRAC));
    }
    if (nTrain + nVal >= ids.length)
      throw new Error(`class with ${ids.length} nodes is too small to split`);
    train.push(...ids.slice(0, nTrain));
    val.push(...ids.slice(nTrain, nTrain + nVal));
    test.push(...ids.slice(nTrain + nVal));
  }
  return { train, val, test };
}

export function convertNpzBench(
  file: string,
  name: string,
  opts: NpzBenchOptions = {}
): CanonicalDataset {
  const minClassSize = opts.minClassSize ?? 0;
  const numSplits = opts.numSplits ?? 10;
  const seed = opts.seed ?? 0;

  const npz = new NpzFile(fs.readFileSync(file));
  for (const want of ["adj_shape", "attr_shape", "labels"])
    if (!npz.has(want)) throw new Error(`npz is missing member '${want}'`);
  const adj = loadCsr(npz, "adj");
  const attr = loadCsr(npz, "attr");
  const labelArr = npz.get("labels");

  const n = adj.shape[0];
  if (adj.shape[1] !== n) throw new Error("adjacency is not square");
  if (attr.shape[0] !== n)
    throw new Error(`attributes have ${attr.shape[0]} rows for ${n} nodes`);
  if (labelArr.data.length !== n)
    throw new Error(`labels length ${labelArr.data.length} does not match ${n} nodes`);

  let labels = Array.from(labelArr.data, (v) => {
    if (!Number.isInteger(v) || v < 0) throw new Error(`bad label value ${v}`);
    return v;
  });
  let numClasses = 1 + Math.max(...labels);
  let pairs = undirectedPairs(csrPairs(adj));
  let features: Triplet[] = csrTriplets(attr);
  let numFeatures = attr.shape[1];

  if (minClassSize > 0) {
    const sizes = new Array<number>(numClasses).fill(0);
    for (const l of labels) sizes[l]++;
    const keepClass = sizes.map((s) => s >= minClassSize);
    if (!keepClass.some(Boolean)) throw new Error("min-class-size removed every class");
    const classMap = new Map<number, number>();
    keepClass.forEach((keep, c) => {
      if (keep) classMap.set(c, classMap.size);
    });
    const nodeMap = new Map<number, number>();
    labels.forEach((l, i) => {
      if (keepClass[l]) nodeMap.set(i, nodeMap.size);
    });
    labels = [...nodeMap.keys()].map((old) => classMap.get(labels[old]) as number);
    numClasses = classMap.size;
    pairs = pairs
      .filter(([a, b]) => nodeMap.has(a) && nodeMap.has(b))
      .map(([a, b]) => [nodeMap.get(a) as number, nodeMap.get(b) as number]);
    features = features
      .filter((t) => nodeMap.has(t.row))
      .map((t) => ({ row: nodeMap.get(t.row) as number, col: t.col, value: t.value }));
  }

  const numNodes = labels.length;
  const splits: Record<string, SplitDef> = {};
  for (let s = 0; s < numSplits; s++) {
    splits[`split${s}`] = sampleSplit(labels, numClasses, new Rng((seed + 1000003 * s) >>> 0));
  }

  return {
    name,
    numNodes,
    numFeatures,
    numClasses,
    features,
    labels: new Map(labels.map((l, i) => [i, l])),
    edges: pairs,
    splits,
  };
}
