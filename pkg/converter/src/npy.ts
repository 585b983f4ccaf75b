/**
 * Reader for .npy arrays and .npz archives (zip of .npy members).
 *
 * Only what the benchmark archives need: format versions 1.0/2.0, C-order,
 * little-endian numeric dtypes.  Object-dtype members are reported by name
 * so callers can skip them instead of failing.
 */

import * as zlib from "node:zlib";
import { decodeRaw, NDArray } from "./pickle.js";

const LOCAL_SIG = 0x04034b50;
const CENTRAL_SIG = 0x02014b50;
const EOCD_SIG = 0x06054b50;

interface ZipEntry {
  name: string;
  method: number;
  compressedSize: number;
  size: number;
  headerOffset: number;
}

function findEocd(buf: Buffer): number {
  // EOCD is at the end, possibly followed by a comment up to 64k
  const lo = Math.max(0, buf.length - 65557);
  for (let i = buf.length - 22; i >= lo; i--) {
    if (buf.readUInt32LE(i) === EOCD_SIG) return i;
  }
  throw new Error("not a zip archive: end record not found");
}

function listEntries(buf: Buffer): ZipEntry[] {
  const eocd = findEocd(buf);
  const count = buf.readUInt16LE(eocd + 10);
  let off = buf.readUInt32LE(eocd + 16);
  const entries: ZipEntry[] = [];
  for (let i = 0; i < count; i++) {
    if (buf.readUInt32LE(off) !== CENTRAL_SIG)
      throw new Error("corrupt zip: bad central directory signature");
    const method = buf.readUInt16LE(off + 10);
    const compressedSize = buf.readUInt32LE(off + 20);
    const size = buf.readUInt32LE(off + 24);
    const nameLen = buf.readUInt16LE(off + 28);
    const extraLen = buf.readUInt16LE(off + 30);
    const commentLen = buf.readUInt16LE(off + 32);
    const headerOffset = buf.readUInt32LE(off + 42);
    const name = buf.toString("utf8", off + 46, off + 46 + nameLen);
    entries.push({ name, method, compressedSize, size, headerOffset });
    off += 46 + nameLen + extraLen + commentLen;
  }
  return entries;
}

function entryData(buf: Buffer, e: ZipEntry): Buffer {
  if (buf.readUInt32LE(e.headerOffset) !== LOCAL_SIG)
    throw new Error(`corrupt zip: bad local header for ${e.name}`);
  // the local extra field can differ from the central one; reread lengths
  const nameLen = buf.readUInt16LE(e.headerOffset + 26);
  const extraLen = buf.readUInt16LE(e.headerOffset + 28);
  const start = e.headerOffset + 30 + nameLen + extraLen;
  const raw = buf.subarray(start, start + e.compressedSize);
  if (e.method === 0) return raw;
  if (e.method === 8) return zlib.inflateRawSync(raw);
  throw new Error(`unsupported zip compression method ${e.method} for ${e.name}`);
}

interface NpyHeader {
  descr: string;
  fortran: boolean;
  shape: number[];
}

function parseNpyHeader(text: string): NpyHeader {
  const descrM = /'descr'\s*:\s*'([^']+)'/.exec(text);
  const fortranM = /'fortran_order'\s*:\s*(True|False)/.exec(text);
  const shapeM = /'shape'\s*:\s*\(([^)]*)\)/.exec(text);
  if (!descrM || !fortranM || !shapeM) throw new Error(`unparseable npy header: ${text}`);
  const shape = shapeM[1]
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => parseInt(s, 10));
  return { descr: descrM[1], fortran: fortranM[1] === "True", shape };
}

export function parseNpy(buf: Buffer): NDArray {
  if (buf.length < 10 || buf[0] !== 0x93 || buf.toString("latin1", 1, 6) !== "NUMPY")
    throw new Error("not an npy file");
  const major = buf[6];
  let headerLen: number;
  let headerStart: number;
  if (major === 1) {
    headerLen = buf.readUInt16LE(8);
    headerStart = 10;
  } else if (major === 2 || major === 3) {
    headerLen = buf.readUInt32LE(8);
    headerStart = 12;
  } else {
    throw new Error(`unsupported npy version ${major}`);
  }
  const header = parseNpyHeader(buf.toString("latin1", headerStart, headerStart + headerLen));
  if (header.fortran) throw new Error("fortran-order npy arrays are not supported");
  const m = /^([<>|=])?([a-zA-Z]\d*)$/.exec(header.descr);
  if (!m) throw new Error(`unsupported npy dtype '${header.descr}'`);
  if (m[1] === ">") throw new Error("big-endian npy arrays are not supported");
  if (m[2].startsWith("O")) throw new Error("object-dtype npy arrays are not supported");
  const count = header.shape.reduce((a, b) => a * b, 1);
  const body = buf.subarray(headerStart + headerLen);
  return {
    kind: "ndarray",
    dtype: m[2],
    shape: header.shape,
    data: decodeRaw(m[2], body, count),
  };
}

export class NpzFile {
  private entries: Map<string, ZipEntry>;

  constructor(private buf: Buffer) {
    this.entries = new Map();
    for (const e of listEntries(buf)) {
      const name = e.name.endsWith(".npy") ? e.name.slice(0, -4) : e.name;
      this.entries.set(name, e);
    }
  }

  keys(): string[] {
    return [...this.entries.keys()];
  }

  has(name: string): boolean {
    return this.entries.has(name);
  }

  /** Load one member; object-dtype members raise, use tryGet to skip them. */
  get(name: string): NDArray {
    const e = this.entries.get(name);
    if (!e) throw new Error(`npz has no member '${name}'`);
    return parseNpy(entryData(this.buf, e));
  }

  tryGet(name: string): NDArray | null {
    if (!this.entries.has(name)) return null;
    try {
      return this.get(name);
    } catch {
      return null;
    }
  }
}
