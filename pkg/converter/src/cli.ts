#!/usr/bin/env node
/**
 * graphmix-convert: turn raw benchmark downloads into canonical dataset
 * directories.
 *
 *   graphmix-convert --format planetoid     --in DIR      --out DIR [--val-size 500]
 *   graphmix-convert --format npz-benchmark --in FILE.npz --out DIR
 *                    [--min-class-size N] [--num-splits 10] [--seed 0]
 *   graphmix-convert --format signed-csv    --in FILE.csv --out DIR
 *
 * Common flags: --name (defaults from the input or the output directory),
 * --expect '{"nodes": ..}' to verify counts for datasets the built-in table
 * does not know, --overwrite to replace an existing output.
 *
 * Exit codes: 0 converted, 1 bad input or usage, 2 count verification failed.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { parseArgs } from "node:util";
import { writeDataset, writeSignedEdges, CanonicalDataset } from "./canonical.js";
import { verifyCounts, CountMismatch, EXPECTED, ExpectedCounts, formatCounts } from "./counts.js";
import { convertPlanetoid, detectPlanetoidName } from "./planetoid.js";
import { convertNpzBench } from "./npzBench.js";
import { convertSigned } from "./signed.js";

const USAGE =
  "usage: graphmix-convert --format planetoid|npz-benchmark|signed-csv --in PATH --out DIR\n" +
  "  [--name NAME] [--expect JSON] [--overwrite]\n" +
  "  planetoid:     [--val-size 500]\n" +
  "  npz-benchmark: [--min-class-size N] [--num-splits 10] [--seed 0]\n";

class UsageError extends Error {}

function intFlag(v: string | undefined, fallback: number, what: string): number {
  if (v === undefined) return fallback;
  const n = Number(v);
  if (!Number.isInteger(n) || n < 0) throw new UsageError(`${what} must be a non-negative integer`);
  return n;
}

function parseExpect(v: string | undefined): ExpectedCounts | null {
  if (v === undefined) return null;
  let doc: unknown;
  try {
    doc = JSON.parse(v);
  } catch (e) {
    throw new UsageError(`--expect is not valid JSON: ${(e as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc))
    throw new UsageError("--expect must be a JSON object of counts");
  return doc as ExpectedCounts;
}

function refuseExisting(out: string, marker: string, overwrite: boolean) {
  if (fs.existsSync(path.join(out, marker)) && !overwrite)
    throw new UsageError(`${out} already holds a converted dataset; pass --overwrite to replace it`);
}

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        format: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
        name: { type: "string" },
        expect: { type: "string" },
        overwrite: { type: "boolean", default: false },
        "val-size": { type: "string" },
        "min-class-size": { type: "string" },
        "num-splits": { type: "string" },
        seed: { type: "string" },
        help: { type: "boolean", default: false },
      },
      allowPositionals: false,
    }).values;
  } catch (e) {
    process.stderr.write(`${(e as Error).message}\n${USAGE}`);
    return 1;
  }
  if (args.help) {
    process.stdout.write(USAGE);
    return 0;
  }

  try {
    const format = args.format;
    const input = args.in;
    const out = args.out;
    if (!format || !input || !out) throw new UsageError("--format, --in, and --out are required");
    if (!fs.existsSync(input)) throw new UsageError(`input ${input} does not exist`);
    const expect = parseExpect(args.expect);

    if (format === "signed-csv") {
      const name = args.name ?? path.basename(path.resolve(out));
      refuseExisting(out, "signed.csv", args.overwrite as boolean);
      const signed = convertSigned(input);
      const counts = { nodes: signed.numNodes, edges: signed.rows.length };
      const verified = verifyCounts(name, counts, expect);
      writeSignedEdges(out, signed.rows);
      process.stdout.write(
        `${name}: ${formatCounts(counts)} (${signed.duplicatePairs} repeated pairs, ` +
          `${signed.selfLoops} self loops kept)\n`
      );
      process.stdout.write(verifiedLine(name, verified));
      process.stdout.write(`wrote ${path.join(out, "signed.csv")}\n`);
      return 0;
    }

    let ds: CanonicalDataset;
    if (format === "planetoid") {
      const dir = fs.statSync(input).isDirectory() ? input : path.dirname(input);
      const name = args.name ?? detectPlanetoidName(dir);
      ds = convertPlanetoid(dir, name, {
        valSize: intFlag(args["val-size"], 500, "--val-size"),
      });
    } else if (format === "npz-benchmark") {
      const name = args.name ?? path.basename(path.resolve(out));
      const table = expect ?? EXPECTED[name];
      ds = convertNpzBench(input, name, {
        minClassSize: intFlag(args["min-class-size"], table?.minClassSize ?? 0, "--min-class-size"),
        numSplits: intFlag(args["num-splits"], 10, "--num-splits"),
        seed: intFlag(args.seed, 0, "--seed"),
      });
    } else {
      throw new UsageError(`unknown --format '${format}'`);
    }

    refuseExisting(out, "meta.json", args.overwrite as boolean);
    const counts = writeDataset(out, ds);
    const verified = verifyCounts(ds.name, counts, expect);
    process.stdout.write(`${ds.name}: ${formatCounts(counts)}\n`);
    process.stdout.write(verifiedLine(ds.name, verified));
    process.stdout.write(`wrote ${out}\n`);
    return 0;
  } catch (e) {
    if (e instanceof CountMismatch) {
      process.stderr.write(`${e.message}\n`);
      return 2;
    }
    process.stderr.write(`error: ${(e as Error).message}\n`);
    if (e instanceof UsageError) process.stderr.write(USAGE);
    return 1;
  }
}

function verifiedLine(name: string, verified: boolean): string {
  return verified
    ? "counts verified against the reference table\n"
    : `no reference counts for '${name}'; output is unverified (use --expect)\n`;
}

const isMain =
  process.argv[1] !== undefined &&
  path.resolve(process.argv[1]) === path.resolve(new URL(import.meta.url).pathname);
if (isMain) process.exit(main(process.argv.slice(2)));
