/**
 * Writers for the canonical dataset directory consumed by the training
 * package:
 *
 *   meta.json            {"name", "num_nodes", "num_features", "num_classes"}
 *   features.csv         "row,col,value" sparse triplets
 *   labels.csv           "node,label"; omitted nodes are unlabeled
 *   edges.csv            "src,dst", each undirected edge once with src < dst
 *   splits/<name>.json   {"train": [ids], "val": [ids], "test": [ids]}
 *
 * A checksums.json (sha256 per file plus summary counts) is written next to
 * the converted files so a transfer can be verified without reparsing.
 */

import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";
import { Triplet } from "./csr.js";

export interface SplitDef {
  train: number[];
  val: number[];
  test: number[];
}

export interface CanonicalDataset {
  name: string;
  numNodes: number;
  numFeatures: number;
  numClasses: number;
  features: Triplet[];
  labels: Map<number, number>;
  edges: Array<[number, number]>;
  splits?: Record<string, SplitDef>;
}

export interface DatasetCounts {
  nodes: number;
  edges: number;
  features: number;
  classes: number;
  train?: number;
  val?: number;
  test?: number;
}

function sha256(data: string | Buffer): string {
  return crypto.createHash("sha256").update(data).digest("hex");
}

function writeFile(dir: string, name: string, body: string, sums: Record<string, string>) {
  const p = path.join(dir, name);
  fs.mkdirSync(path.dirname(p), { recursive: true });
  fs.writeFileSync(p, body);
  sums[name] = sha256(body);
}

function checkIds(ids: number[], n: number, what: string) {
  for (const i of ids) {
    if (!Number.isInteger(i) || i < 0 || i >= n)
      throw new Error(`${what} id ${i} outside [0, ${n})`);
  }
}

export function validateDataset(ds: CanonicalDataset): void {
  if (ds.numNodes < 1) throw new Error("dataset has no nodes");
  if (ds.numFeatures < 1) throw new Error("dataset has no feature columns");
  if (ds.numClasses < 2) throw new Error("dataset needs at least two classes");
  for (const t of ds.features) {
    if (t.row < 0 || t.row >= ds.numNodes || t.col < 0 || t.col >= ds.numFeatures)
      throw new Error(`feature triplet (${t.row}, ${t.col}) out of range`);
    if (!Number.isFinite(t.value)) throw new Error("non-finite feature value");
  }
  for (const [node, label] of ds.labels) {
    if (node < 0 || node >= ds.numNodes) throw new Error(`labeled node ${node} out of range`);
    if (!Number.isInteger(label) || label < 0 || label >= ds.numClasses)
      throw new Error(`label ${label} outside [0, ${ds.numClasses}) for node ${node}`);
  }
  const seen = new Set<number>();
  for (const [a, b] of ds.edges) {
    if (a >= b) throw new Error(`edge (${a}, ${b}) is not in src < dst form`);
    if (a < 0 || b >= ds.numNodes) throw new Error(`edge (${a}, ${b}) out of range`);
    const key = a * 0x40000000 + b;
    if (seen.has(key)) throw new Error(`duplicate edge (${a}, ${b})`);
    seen.add(key);
  }
  for (const [name, split] of Object.entries(ds.splits ?? {})) {
    checkIds(split.train, ds.numNodes, `${name} train`);
    checkIds(split.val, ds.numNodes, `${name} val`);
    checkIds(split.test, ds.numNodes, `${name} test`);
    const all = new Set([...split.train, ...split.val]);
    if (all.size !== split.train.length + split.val.length)
      throw new Error(`split '${name}' has overlapping train/val ids`);
    for (const t of split.test)
      if (all.has(t)) throw new Error(`split '${name}' has test ids inside train/val`);
    for (const t of split.train)
      if (!ds.labels.has(t)) throw new Error(`split '${name}' trains on unlabeled node ${t}`);
    // val/test metrics need ground truth too; the loader enforces the same
    for (const t of [...split.val, ...split.test])
      if (!ds.labels.has(t))
        throw new Error(`split '${name}' evaluates unlabeled node ${t}`);
  }
}

export function datasetCounts(ds: CanonicalDataset): DatasetCounts {
  const counts: DatasetCounts = {
    nodes: ds.numNodes,
    edges: ds.edges.length,
    features: ds.numFeatures,
    classes: ds.numClasses,
  };
  const std = ds.splits?.standard;
  if (std) {
    counts.train = std.train.length;
    counts.val = std.val.length;
    counts.test = std.test.length;
  }
  return counts;
}

/** Number formatting matching what the loader parses back exactly. */
function fmt(v: number): string {
  return String(v);
}

export function writeDataset(dir: string, ds: CanonicalDataset): DatasetCounts {
  validateDataset(ds);
  fs.mkdirSync(dir, { recursive: true });
  const sums: Record<string, string> = {};

  const meta =
    JSON.stringify(
      {
        name: ds.name,
        num_classes: ds.numClasses,
        num_features: ds.numFeatures,
        num_nodes: ds.numNodes,
      },
      null,
      2
    ) + "\n";
  writeFile(dir, "meta.json", meta, sums);

  const feats = [...ds.features].sort((a, b) => a.row - b.row || a.col - b.col);
  writeFile(dir, "features.csv", feats.map((t) => `${t.row},${t.col},${fmt(t.value)}`).join("\n") + (feats.length ? "\n" : ""), sums);

  const labelRows = [...ds.labels.entries()].sort((a, b) => a[0] - b[0]);
  writeFile(dir, "labels.csv", labelRows.map(([n, l]) => `${n},${l}`).join("\n") + (labelRows.length ? "\n" : ""), sums);

  const edges = [...ds.edges].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  writeFile(dir, "edges.csv", edges.map(([a, b]) => `${a},${b}`).join("\n") + (edges.length ? "\n" : ""), sums);

  for (const [name, split] of Object.entries(ds.splits ?? {})) {
    const doc = {
      train: [...split.train].sort((a, b) => a - b),
      val: [...split.val].sort((a, b) => a - b),
      test: [...split.test].sort((a, b) => a - b),
    };
    writeFile(dir, path.join("splits", `${name}.json`), JSON.stringify(doc) + "\n", sums);
  }

  const counts = datasetCounts(ds);
  writeFile(dir, "checksums.json", JSON.stringify({ counts, files: sums }, null, 2) + "\n", sums);
  return counts;
}

/** Signed edge list output (link tasks): raw weighted rows, ids densified. */
export function writeSignedEdges(
  dir: string,
  rows: Array<[number, number, number]>
): void {
  fs.mkdirSync(dir, { recursive: true });
  const sums: Record<string, string> = {};
  writeFile(dir, "signed.csv", rows.map(([s, d, w]) => `${s},${d},${fmt(w)}`).join("\n") + (rows.length ? "\n" : ""), sums);
  const counts = { edges: rows.length, nodes: 1 + Math.max(...rows.flatMap(([s, d]) => [s, d])) };
  writeFile(dir, "checksums.json", JSON.stringify({ counts, files: sums }, null, 2) + "\n", sums);
}
