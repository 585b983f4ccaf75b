/**
 * Converter for raw signed edge CSVs ("src,dst,rating[,timestamp,...]").
 * Node ids are renumbered densely (raw files skip ids); extra columns are
 * dropped; every input row is kept, including repeated pairs, since the
 * merge policy belongs to the consumer that builds the line graph.
 */

import * as fs from "node:fs";

export interface SignedEdges {
  rows: Array<[number, number, number]>;
  numNodes: number;
  /** input rows beyond the first occurrence of their unordered pair */
  duplicatePairs: number;
  selfLoops: number;
}

export function convertSigned(file: string): SignedEdges {
  const text = fs.readFileSync(file, "utf8");
  const raw: Array<[number, number, number]> = [];
  let lineNo = 0;
  for (const line of text.split("\n")) {
    lineNo++;
    const s = line.trim();
    if (!s) continue;
    const parts = s.split(",");
    if (parts.length < 3)
      throw new Error(`${file}:${lineNo}: expected src,dst,rating, got '${s}'`);
    const src = Number(parts[0]);
    const dst = Number(parts[1]);
    const rating = Number(parts[2]);
    if (!Number.isInteger(src) || !Number.isInteger(dst) || !Number.isFinite(rating))
      throw new Error(`${file}:${lineNo}: non-numeric edge row '${s}'`);
    raw.push([src, dst, rating]);
  }
  if (raw.length === 0) throw new Error(`${file}: no edges`);

  const ids = [...new Set(raw.flatMap(([s, d]) => [s, d]))].sort((a, b) => a - b);
  const remap = new Map(ids.map((id, i) => [id, i]));

  const seen = new Set<string>();
  let duplicatePairs = 0;
  let selfLoops = 0;
  const rows: Array<[number, number, number]> = [];
  for (const [s, d, w] of raw) {
    const a = remap.get(s) as number;
    const b = remap.get(d) as number;
    if (a === b) selfLoops++;
    const key = a < b ? `${a},${b}` : `${b},${a}`;
    if (seen.has(key)) duplicatePairs++;
    else seen.add(key);
    rows.push([a, b, w]);
  }
  return { rows, numNodes: ids.length, duplicatePairs, selfLoops };
}
