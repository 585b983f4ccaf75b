import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { main } from "../src/cli.js";

const FIX = path.join(__dirname, "fixtures");
const GOLDEN = JSON.parse(fs.readFileSync(path.join(FIX, "expected.json"), "utf8"));

let tmp: string;
let stdout: string;
let stderr: string;

beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "cli-"));
  stdout = "";
  stderr = "";
  vi.spyOn(process.stdout, "write").mockImplementation((chunk) => {
    stdout += String(chunk);
    return true;
  });
  vi.spyOn(process.stderr, "write").mockImplementation((chunk) => {
    stderr += String(chunk);
    return true;
  });
});

afterEach(() => {
  vi.restoreAllMocks();
  fs.rmSync(tmp, { recursive: true, force: true });
});

describe("planetoid via cli", () => {
  const want = GOLDEN.planetoid[0];

  function run(extra: string[] = [], out = path.join(tmp, "out")): number {
    return main([
      "--format",
      "planetoid",
      "--in",
      path.join(FIX, want.dir),
      "--out",
      out,
      "--val-size",
      String(want.counts.val),
      "--expect",
      JSON.stringify(want.counts),
      ...extra,
    ]);
  }

  it("converts, verifies, and writes the directory", () => {
    expect(run()).toBe(0);
    expect(stdout).toContain("counts verified");
    expect(stdout).toContain(`nodes=${want.counts.nodes}`);
    for (const f of ["meta.json", "features.csv", "labels.csv", "edges.csv", "checksums.json"])
      expect(fs.existsSync(path.join(tmp, "out", f))).toBe(true);
    expect(fs.existsSync(path.join(tmp, "out", "splits", "standard.json"))).toBe(true);
  });

  it("refuses to clobber an existing output without --overwrite", () => {
    expect(run()).toBe(0);
    expect(run()).toBe(1);
    expect(stderr).toContain("--overwrite");
    expect(run(["--overwrite"])).toBe(0);
  });

  it("exits 2 with the mismatched fields when counts disagree", () => {
    const bad = { ...want.counts, nodes: want.counts.nodes + 5 };
    const code = main([
      "--format",
      "planetoid",
      "--in",
      path.join(FIX, want.dir),
      "--out",
      path.join(tmp, "out"),
      "--val-size",
      String(want.counts.val),
      "--expect",
      JSON.stringify(bad),
    ]);
    expect(code).toBe(2);
    expect(stderr).toContain(`nodes: expected ${want.counts.nodes + 5}, got ${want.counts.nodes}`);
  });
});

describe("npz via cli", () => {
  it("converts with split options and reports unverified names", () => {
    const code = main([
      "--format",
      "npz-benchmark",
      "--in",
      path.join(FIX, GOLDEN.npz.file),
      "--out",
      path.join(tmp, "bench"),
      "--num-splits",
      "2",
      "--seed",
      "3",
    ]);
    expect(code).toBe(0);
    expect(stdout).toContain("output is unverified");
    expect(fs.existsSync(path.join(tmp, "bench", "splits", "split0.json"))).toBe(true);
    expect(fs.existsSync(path.join(tmp, "bench", "splits", "split1.json"))).toBe(true);
    expect(fs.existsSync(path.join(tmp, "bench", "splits", "split2.json"))).toBe(false);
  });

  it("applies --min-class-size before anything else", () => {
    const want = GOLDEN.npz.filtered_min35;
    const code = main([
      "--format",
      "npz-benchmark",
      "--in",
      path.join(FIX, GOLDEN.npz.file),
      "--out",
      path.join(tmp, "bench"),
      "--min-class-size",
      "35",
      "--num-splits",
      "1",
      "--expect",
      JSON.stringify({ nodes: want.nodes, edges: want.edges, classes: want.classes }),
    ]);
    expect(code).toBe(0);
    expect(stdout).toContain("counts verified");
  });
});

describe("signed csv via cli", () => {
  it("converts and reports repeated pairs", () => {
    const code = main([
      "--format",
      "signed-csv",
      "--in",
      path.join(FIX, GOLDEN.signed.file),
      "--out",
      path.join(tmp, "signed"),
      "--expect",
      JSON.stringify(GOLDEN.signed.counts),
    ]);
    expect(code).toBe(0);
    expect(stdout).toContain(`${GOLDEN.signed.duplicate_pairs} repeated pairs`);
    expect(stdout).toContain("counts verified");
    expect(fs.existsSync(path.join(tmp, "signed", "signed.csv"))).toBe(true);
  });
});

describe("usage errors", () => {
  it("rejects unknown formats", () => {
    expect(main(["--format", "arrow", "--in", FIX, "--out", path.join(tmp, "x")])).toBe(1);
    expect(stderr).toContain("unknown --format");
  });

  it("requires the three mandatory flags", () => {
    expect(main([])).toBe(1);
    expect(stderr).toContain("--format, --in, and --out are required");
  });

  it("rejects a missing input path", () => {
    expect(main(["--format", "planetoid", "--in", "/nope", "--out", path.join(tmp, "x")])).toBe(1);
    expect(stderr).toContain("does not exist");
  });

  it("rejects malformed --expect JSON", () => {
    expect(
      main(["--format", "signed-csv", "--in", path.join(FIX, GOLDEN.signed.file), "--out", path.join(tmp, "x"), "--expect", "{nodes}"])
    ).toBe(1);
    expect(stderr).toContain("--expect is not valid JSON");
  });
});
