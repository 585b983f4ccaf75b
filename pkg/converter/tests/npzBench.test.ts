import { describe, expect, it } from "vitest";
import * as fs from "node:fs";
import * as path from "node:path";
import { convertNpzBench } from "../src/npzBench.js";
import { datasetCounts } from "../src/canonical.js";

const FIX = path.join(__dirname, "fixtures");
const GOLDEN = JSON.parse(fs.readFileSync(path.join(FIX, "expected.json"), "utf8"));
const NPZ = path.join(FIX, GOLDEN.npz.file);

describe("npz benchmark conversion", () => {
  const ds = convertNpzBench(NPZ, "tinybench", { numSplits: 3, seed: 7 });

  it("matches the reference counts", () => {
    const counts = datasetCounts(ds);
    expect(counts.nodes).toBe(GOLDEN.npz.counts.nodes);
    expect(counts.edges).toBe(GOLDEN.npz.counts.edges);
    expect(counts.features).toBe(GOLDEN.npz.counts.features);
    expect(counts.classes).toBe(GOLDEN.npz.counts.classes);
  });

  it("symmetrizes the directed adjacency into unique undirected pairs", () => {
    expect(ds.edges).toEqual(GOLDEN.npz.edges.map((e: number[]) => [e[0], e[1]]));
  });

  it("keeps every label and every attribute triplet", () => {
    expect([...ds.labels.entries()].map(([, v]) => v)).toEqual(GOLDEN.npz.labels);
    const got = ds.features.map((t) => [t.row, t.col, t.value]);
    expect(got).toEqual(GOLDEN.npz.features);
  });

  it("samples splits by the class-size rule", () => {
    const sizes: Record<number, number> = GOLDEN.npz.class_sizes;
    for (const splitName of ["split0", "split1", "split2"]) {
      const split = ds.splits![splitName];
      expect(split).toBeDefined();
      for (const [cls, size] of Object.entries(sizes).map(([k, v]) => [Number(k), v])) {
        const inTrain = split.train.filter((i) => ds.labels.get(i) === cls).length;
        const inVal = split.val.filter((i) => ds.labels.get(i) === cls).length;
        const inTest = split.test.filter((i) => ds.labels.get(i) === cls).length;
        if (size > 100) {
          expect(inTrain).toBe(20);
          expect(inVal).toBe(30);
        } else {
          expect(inTrain).toBe(Math.floor(size * 0.2));
          expect(inVal).toBe(Math.floor(size * 0.3));
        }
        expect(inTrain + inVal + inTest).toBe(size);
      }
      const all = [...split.train, ...split.val, ...split.test];
      expect(new Set(all).size).toBe(all.length);
      expect(all.length).toBe(ds.numNodes);
    }
  });

  it("is deterministic in the seed and varies across split indices", () => {
    const again = convertNpzBench(NPZ, "tinybench", { numSplits: 3, seed: 7 });
    expect(again.splits!.split0).toEqual(ds.splits!.split0);
    expect(ds.splits!.split1.train).not.toEqual(ds.splits!.split0.train);
    const other = convertNpzBench(NPZ, "tinybench", { numSplits: 1, seed: 8 });
    expect(other.splits!.split0.train).not.toEqual(ds.splits!.split0.train);
  });
});

describe("min-class-size filter", () => {
  const want = GOLDEN.npz.filtered_min35;
  const ds = convertNpzBench(NPZ, "tinybench", { minClassSize: 35, numSplits: 1 });

  it("drops small classes with their nodes and renumbers densely", () => {
    expect(ds.numNodes).toBe(want.nodes);
    expect(ds.numClasses).toBe(want.classes);
    expect(ds.edges.length).toBe(want.edges);
  });

  it("keeps surviving nodes in original order with original labels", () => {
    const kept: number[] = want.kept;
    expect(ds.numNodes).toBe(kept.length);
    for (let newId = 0; newId < kept.length; newId++) {
      expect(ds.labels.get(newId)).toBe(GOLDEN.npz.labels[kept[newId]]);
    }
  });

  it("refuses a threshold that removes every class", () => {
    expect(() => convertNpzBench(NPZ, "tinybench", { minClassSize: 10000 })).toThrow(
      /removed every class/
    );
  });
});
