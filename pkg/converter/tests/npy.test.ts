import { describe, expect, it } from "vitest";
import * as fs from "node:fs";
import * as path from "node:path";
import { NpzFile } from "../src/npy.js";
import { csrFromParts, csrTriplets } from "../src/csr.js";

const FIX = path.join(__dirname, "fixtures");
const GOLDEN = JSON.parse(fs.readFileSync(path.join(FIX, "expected.json"), "utf8"));

function openNpz(): NpzFile {
  return new NpzFile(fs.readFileSync(path.join(FIX, GOLDEN.npz.file)));
}

describe("npz archive", () => {
  it("lists the stored members", () => {
    const keys = openNpz().keys();
    for (const want of [
      "adj_data",
      "adj_indices",
      "adj_indptr",
      "adj_shape",
      "attr_data",
      "attr_indices",
      "attr_indptr",
      "attr_shape",
      "labels",
    ])
      expect(keys).toContain(want);
  });

  it("decodes integer and float members exactly", () => {
    const npz = openNpz();
    const n = GOLDEN.npz.counts.nodes;
    expect([...npz.get("adj_shape").data]).toEqual([n, n]);
    expect([...npz.get("attr_shape").data]).toEqual([n, GOLDEN.npz.counts.features]);
    expect([...npz.get("labels").data]).toEqual(GOLDEN.npz.labels);
  });

  it("reassembles the attribute matrix to the exact triplets", () => {
    const npz = openNpz();
    const attr = csrFromParts(
      [GOLDEN.npz.counts.nodes, GOLDEN.npz.counts.features],
      npz.get("attr_data"),
      npz.get("attr_indices"),
      npz.get("attr_indptr")
    );
    const got = csrTriplets(attr).map((t) => [t.row, t.col, t.value]);
    expect(got).toEqual(GOLDEN.npz.features);
  });

  it("skips object-dtype members instead of crashing", () => {
    const npz = openNpz();
    expect(npz.has("class_names")).toBe(true);
    expect(npz.tryGet("class_names")).toBeNull();
    expect(() => npz.get("class_names")).toThrow();
  });

  it("rejects missing members by name", () => {
    expect(() => openNpz().get("no_such_member")).toThrow(/no member/);
  });
});
