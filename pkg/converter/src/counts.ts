/**
 * Reference counts for the known benchmark datasets.  A conversion whose
 * output disagrees with its reference row aborts with every mismatched
 * field listed; silent shape drift is how wrong numbers end up in result
 * tables.  Unknown dataset names convert without verification (the counts
 * are still printed), and --expect can supply a reference for them.
 */

import { DatasetCounts } from "./canonical.js";

export type ExpectedCounts = Partial<DatasetCounts> & {
  /** npz sources: drop classes smaller than this before anything else */
  minClassSize?: number;
};

export const EXPECTED: Record<string, ExpectedCounts> = {
  cora: {
    nodes: 2708,
    edges: 5429,
    features: 1433,
    classes: 7,
    train: 140,
    val: 500,
    test: 1000,
  },
  citeseer: {
    nodes: 3327,
    edges: 4732,
    features: 3703,
    classes: 6,
    train: 120,
    val: 500,
    test: 1000,
  },
  pubmed: {
    nodes: 19717,
    edges: 44338,
    features: 500,
    classes: 3,
    train: 60,
    val: 500,
    test: 1000,
  },
  cora_full: {
    nodes: 18703,
    edges: 62421,
    features: 8710,
    classes: 67,
    minClassSize: 50,
  },
  coauthor_cs: {
    nodes: 18333,
    edges: 81894,
    features: 6805,
    classes: 15,
  },
  coauthor_physics: {
    nodes: 34493,
    edges: 247962,
    features: 8415,
    classes: 5,
  },
  bitcoin_alpha: {
    nodes: 3783,
    edges: 24186,
  },
  bitcoin_otc: {
    nodes: 5881,
    edges: 35592,
  },
};

const COUNT_KEYS = ["nodes", "edges", "features", "classes", "train", "val", "test"] as const;

export class CountMismatch extends Error {}

/**
 * Compare produced counts against the reference for `name` (or an explicit
 * override).  Throws CountMismatch on any disagreement; returns false when
 * no reference exists so the caller can say the output went unverified.
 */
export function verifyCounts(
  name: string,
  actual: Partial<DatasetCounts>,
  override?: ExpectedCounts | null
): boolean {
  const expected = override ?? EXPECTED[name];
  if (!expected) return false;
  const bad: string[] = [];
  for (const key of COUNT_KEYS) {
    const want = expected[key];
    if (want === undefined) continue;
    const got = actual[key];
    if (got !== want) bad.push(`${key}: expected ${want}, got ${got ?? "missing"}`);
  }
  if (bad.length)
    throw new CountMismatch(
      `count verification failed for '${name}':\n  ` + bad.join("\n  ")
    );
  return true;
}

export function formatCounts(actual: Partial<DatasetCounts>): string {
  return COUNT_KEYS.filter((k) => actual[k] !== undefined)
    .map((k) => `${k}=${actual[k]}`)
    .join(" ");
}
