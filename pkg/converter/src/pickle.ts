/**
 * Minimal unpickler covering the opcode subset that numpy / scipy / stdlib
 * objects actually use in protocol 0..2 streams.
 *
 * Supported payloads: ints, floats, bools, None, str, bytes, tuples, lists,
 * dicts (incl. collections.defaultdict), numpy ndarrays and dtypes, and
 * scipy CSR matrices.  Anything else raises with the offending global name
 * so the caller knows what the file contained.
 */

export interface PyClass {
  kind: "class";
  module: string;
  name: string;
}

export interface NDArray {
  kind: "ndarray";
  dtype: string;
  shape: number[];
  // row-major, eagerly widened to f64 (exact for i4/f4/u1/b1, and for the
  // small i8 values these files carry)
  data: Float64Array;
}

export interface CSRMatrix {
  kind: "csr";
  shape: [number, number];
  data: NDArray;
  indices: NDArray;
  indptr: NDArray;
}

interface DTypeStub {
  kind: "dtype";
  descr: string;
  byteorder: string;
}

interface Instance {
  kind: "instance";
  cls: PyClass;
  state?: PyValue;
}

export type PyValue =
  | null
  | boolean
  | number
  | string
  | Uint8Array
  | PyValue[]
  | Map<PyValue, PyValue>
  | PyClass
  | NDArray
  | CSRMatrix
  | DTypeStub
  | Instance;

const NDARRAY_RECONSTRUCT = new Set([
  "numpy.core.multiarray._reconstruct",
  "numpy._core.multiarray._reconstruct",
]);

const CSR_CLASSES = new Set([
  "scipy.sparse.csr.csr_matrix",
  "scipy.sparse._csr.csr_matrix",
]);

function latin1Encode(s: string): Uint8Array {
  const out = new Uint8Array(s.length);
  for (let i = 0; i < s.length; i++) {
    const c = s.charCodeAt(i);
    if (c > 0xff) throw new Error(`non-latin1 char U+${c.toString(16)} in byte string`);
    out[i] = c;
  }
  return out;
}

function elementSize(descr: string): number {
  const m = /^[a-z](\d+)$/.exec(descr);
  if (!m) throw new Error(`unsupported dtype descr '${descr}'`);
  return parseInt(m[1], 10);
}

/** Decode a raw little-endian buffer into f64 values according to descr. */
export function decodeRaw(descr: string, raw: Uint8Array, count: number): Float64Array {
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  const out = new Float64Array(count);
  switch (descr) {
    case "f8":
      for (let i = 0; i < count; i++) out[i] = view.getFloat64(i * 8, true);
      break;
    case "f4":
      for (let i = 0; i < count; i++) out[i] = view.getFloat32(i * 4, true);
      break;
    case "i4":
      for (let i = 0; i < count; i++) out[i] = view.getInt32(i * 4, true);
      break;
    case "i8":
      for (let i = 0; i < count; i++) {
        const v = view.getBigInt64(i * 8, true);
        if (v > 9007199254740991n || v < -9007199254740991n)
          throw new Error(`int64 value ${v} exceeds the float64 safe range`);
        out[i] = Number(v);
      }
      break;
    case "i2":
      for (let i = 0; i < count; i++) out[i] = view.getInt16(i * 2, true);
      break;
    case "i1":
      for (let i = 0; i < count; i++) out[i] = view.getInt8(i);
      break;
    case "u1":
    case "b1":
      for (let i = 0; i < count; i++) out[i] = raw[i];
      break;
    default:
      throw new Error(`unsupported dtype descr '${descr}'`);
  }
  return out;
}

function buildNDArray(state: PyValue): NDArray {
  // ndarray.__setstate__ tuple: (version, shape, dtype, is_fortran, data)
  if (!Array.isArray(state) || state.length < 5)
    throw new Error("unexpected ndarray state");
  const [, shapeV, dtypeV, fortran, dataV] = state as PyValue[];
  if (!Array.isArray(shapeV)) throw new Error("ndarray shape is not a tuple");
  const shape = shapeV.map((d) => {
    if (typeof d !== "number") throw new Error("non-numeric dim in ndarray shape");
    return d;
  });
  const dt = dtypeV as DTypeStub;
  if (!dt || (dt as DTypeStub).kind !== "dtype")
    throw new Error("ndarray state has no dtype");
  if (dt.byteorder === ">")
    throw new Error("big-endian arrays are not supported");
  if (fortran) throw new Error("fortran-order arrays are not supported");
  if (!(dataV instanceof Uint8Array))
    throw new Error("ndarray data is not a byte string");
  const count = shape.reduce((a, b) => a * b, 1);
  if (dataV.byteLength !== count * elementSize(dt.descr))
    throw new Error(
      `ndarray buffer is ${dataV.byteLength} bytes, expected ${count * elementSize(dt.descr)}`
    );
  return { kind: "ndarray", dtype: dt.descr, shape, data: decodeRaw(dt.descr, dataV, count) };
}

function asNDArray(v: PyValue, what: string): NDArray {
  if (!v || (v as NDArray).kind !== "ndarray") throw new Error(`${what} is not an ndarray`);
  return v as NDArray;
}

function buildCSR(inst: Instance, state: PyValue): CSRMatrix {
  if (!(state instanceof Map)) throw new Error("unexpected csr_matrix state");
  const get = (key: string): PyValue => {
    for (const [k, v] of state) if (k === key) return v;
    throw new Error(`csr_matrix state missing '${key}'`);
  };
  const shapeV = get("_shape");
  if (!Array.isArray(shapeV) || shapeV.length !== 2)
    throw new Error("csr_matrix shape is not a pair");
  return {
    kind: "csr",
    shape: [shapeV[0] as number, shapeV[1] as number],
    data: asNDArray(get("data"), "csr data"),
    indices: asNDArray(get("indices"), "csr indices"),
    indptr: asNDArray(get("indptr"), "csr indptr"),
  };
}

class Unpickler {
  private pos = 0;
  private view: DataView;
  private stack: PyValue[] = [];
  private marks: number[] = [];
  private memo: PyValue[] = [];

  constructor(private buf: Uint8Array) {
    this.view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  }

  private byte(): number {
    return this.buf[this.pos++];
  }

  private bytes(n: number): Uint8Array {
    const out = this.buf.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  private line(): string {
    const nl = this.buf.indexOf(0x0a, this.pos);
    if (nl < 0) throw new Error("unterminated text opcode argument");
    const s = Buffer.from(this.buf.subarray(this.pos, nl)).toString("latin1");
    this.pos = nl + 1;
    return s;
  }

  private u32(): number {
    const v = this.view.getUint32(this.pos, true);
    this.pos += 4;
    return v;
  }

  private push(v: PyValue) {
    this.stack.push(v);
  }

  private pop(): PyValue {
    if (this.stack.length === 0) throw new Error("pickle stack underflow");
    return this.stack.pop() as PyValue;
  }

  private popToMark(): PyValue[] {
    const m = this.marks.pop();
    if (m === undefined) throw new Error("pickle mark underflow");
    return this.stack.splice(m);
  }

  private reduce(cls: PyValue, args: PyValue): PyValue {
    if (!cls || (cls as PyClass).kind !== "class")
      throw new Error("REDUCE callee is not a class");
    const full = `${(cls as PyClass).module}.${(cls as PyClass).name}`;
    const argv = Array.isArray(args) ? args : [];
    if (full === "_codecs.encode") {
      const [s, codec] = argv;
      if (typeof s !== "string") throw new Error("_codecs.encode arg is not a string");
      if (codec !== "latin1" && codec !== "latin-1" && codec !== undefined)
        throw new Error(`unsupported codec '${codec}'`);
      return latin1Encode(s);
    }
    if (NDARRAY_RECONSTRUCT.has(full)) {
      return { kind: "instance", cls: { kind: "class", module: "numpy", name: "ndarray" } };
    }
    if (full === "numpy.dtype" || full === "numpy._core.multiarray.dtype") {
      const descr = argv[0];
      if (typeof descr !== "string") throw new Error("dtype descr is not a string");
      return { kind: "dtype", descr, byteorder: "=" };
    }
    if (full === "collections.defaultdict") return new Map();
    if (full === "collections.OrderedDict") {
      const m = new Map<PyValue, PyValue>();
      const items = argv[0];
      if (Array.isArray(items))
        for (const it of items) {
          if (!Array.isArray(it) || it.length !== 2) throw new Error("bad OrderedDict item");
          m.set(it[0], it[1]);
        }
      return m;
    }
    throw new Error(`cannot reconstruct '${full}'`);
  }

  private newobj(cls: PyValue, args: PyValue): PyValue {
    if (!cls || (cls as PyClass).kind !== "class")
      throw new Error("NEWOBJ callee is not a class");
    void args;
    return { kind: "instance", cls: cls as PyClass };
  }

  private buildOp() {
    const state = this.pop();
    const target = this.pop();
    if (target && (target as DTypeStub).kind === "dtype") {
      // dtype.__setstate__: (version, byteorder, subdescr, names, fields, ...)
      const dt = target as DTypeStub;
      if (Array.isArray(state) && typeof state[1] === "string") dt.byteorder = state[1];
      this.push(dt);
      return;
    }
    if (target && (target as Instance).kind === "instance") {
      const inst = target as Instance;
      const full = `${inst.cls.module}.${inst.cls.name}`;
      if (full === "numpy.ndarray") {
        this.push(buildNDArray(state));
        return;
      }
      if (CSR_CLASSES.has(full)) {
        this.push(buildCSR(inst, state));
        return;
      }
      inst.state = state;
      this.push(inst);
      return;
    }
    if (target instanceof Map && state instanceof Map) {
      for (const [k, v] of state) target.set(k, v);
      this.push(target);
      return;
    }
    throw new Error("BUILD on unsupported object");
  }

  load(): PyValue {
    for (;;) {
      const op = this.byte();
      if (op === undefined) throw new Error("pickle stream ended without STOP");
      switch (op) {
        case 0x80: // PROTO
          this.byte();
          break;
        case 0x2e: // STOP
          return this.pop();
        case 0x28: // MARK
          this.marks.push(this.stack.length);
          break;
        case 0x30: // POP
          this.pop();
          break;
        case 0x32: // DUP
          this.push(this.stack[this.stack.length - 1]);
          break;
        case 0x4e: // NONE
          this.push(null);
          break;
        case 0x88: // NEWTRUE
          this.push(true);
          break;
        case 0x89: // NEWFALSE
          this.push(false);
          break;
        case 0x4b: // BININT1
          this.push(this.byte());
          break;
        case 0x4d: // BININT2
          this.push(this.byte() | (this.byte() << 8));
          break;
        case 0x4a: {
          // BININT
          const v = this.view.getInt32(this.pos, true);
          this.pos += 4;
          this.push(v);
          break;
        }
        case 0x8a: {
          // LONG1: little-endian two's-complement
          const n = this.byte();
          let v = 0n;
          const raw = this.bytes(n);
          for (let i = n - 1; i >= 0; i--) v = (v << 8n) | BigInt(raw[i]);
          if (n > 0 && raw[n - 1] & 0x80) v -= 1n << BigInt(8 * n);
          if (v > 9007199254740991n || v < -9007199254740991n)
            throw new Error("LONG1 value exceeds the float64 safe range");
          this.push(Number(v));
          break;
        }
        case 0x47: {
          // BINFLOAT: big-endian double
          const v = this.view.getFloat64(this.pos, false);
          this.pos += 8;
          this.push(v);
          break;
        }
        case 0x58: {
          // BINUNICODE
          const n = this.u32();
          this.push(Buffer.from(this.bytes(n)).toString("utf8"));
          break;
        }
        case 0x8c: {
          // SHORT_BINUNICODE
          const n = this.byte();
          this.push(Buffer.from(this.bytes(n)).toString("utf8"));
          break;
        }
        case 0x55: {
          // SHORT_BINSTRING: py2 str, raw bytes
          const n = this.byte();
          this.push(Uint8Array.from(this.bytes(n)));
          break;
        }
        case 0x54: {
          // BINSTRING
          const n = this.u32();
          this.push(Uint8Array.from(this.bytes(n)));
          break;
        }
        case 0x43: {
          // SHORT_BINBYTES
          const n = this.byte();
          this.push(Uint8Array.from(this.bytes(n)));
          break;
        }
        case 0x42: {
          // BINBYTES
          const n = this.u32();
          this.push(Uint8Array.from(this.bytes(n)));
          break;
        }
        case 0x29: // EMPTY_TUPLE
          this.push([]);
          break;
        case 0x85: {
          // TUPLE1
          const a = this.pop();
          this.push([a]);
          break;
        }
        case 0x86: {
          // TUPLE2
          const b = this.pop();
          const a = this.pop();
          this.push([a, b]);
          break;
        }
        case 0x87: {
          // TUPLE3
          const c = this.pop();
          const b = this.pop();
          const a = this.pop();
          this.push([a, b, c]);
          break;
        }
        case 0x74: // TUPLE
          this.push(this.popToMark());
          break;
        case 0x5d: // EMPTY_LIST
          this.push([]);
          break;
        case 0x6c: // LIST
          this.push(this.popToMark());
          break;
        case 0x61: {
          // APPEND
          const v = this.pop();
          const lst = this.stack[this.stack.length - 1];
          if (!Array.isArray(lst)) throw new Error("APPEND target is not a list");
          lst.push(v);
          break;
        }
        case 0x65: {
          // APPENDS
          const items = this.popToMark();
          const lst = this.stack[this.stack.length - 1];
          if (!Array.isArray(lst)) throw new Error("APPENDS target is not a list");
          lst.push(...items);
          break;
        }
        case 0x7d: // EMPTY_DICT
          this.push(new Map());
          break;
        case 0x64: {
          // DICT
          const items = this.popToMark();
          const m = new Map<PyValue, PyValue>();
          for (let i = 0; i < items.length; i += 2) m.set(items[i], items[i + 1]);
          this.push(m);
          break;
        }
        case 0x73: {
          // SETITEM
          const v = this.pop();
          const k = this.pop();
          const m = this.stack[this.stack.length - 1];
          if (!(m instanceof Map)) throw new Error("SETITEM target is not a dict");
          m.set(k, v);
          break;
        }
        case 0x75: {
          // SETITEMS
          const items = this.popToMark();
          const m = this.stack[this.stack.length - 1];
          if (!(m instanceof Map)) throw new Error("SETITEMS target is not a dict");
          for (let i = 0; i < items.length; i += 2) m.set(items[i], items[i + 1]);
          break;
        }
        case 0x71: // BINPUT
          this.memo[this.byte()] = this.stack[this.stack.length - 1];
          break;
        case 0x72: // LONG_BINPUT
          this.memo[this.u32()] = this.stack[this.stack.length - 1];
          break;
        case 0x94: // MEMOIZE
          this.memo.push(this.stack[this.stack.length - 1]);
          break;
        case 0x68: // BINGET
          this.push(this.memo[this.byte()]);
          break;
        case 0x6a: // LONG_BINGET
          this.push(this.memo[this.u32()]);
          break;
        case 0x63: {
          // GLOBAL
          let module = this.line();
          const name = this.line();
          if (module === "__builtin__") module = "builtins";
          this.push({ kind: "class", module, name });
          break;
        }
        case 0x93: {
          // STACK_GLOBAL
          const name = this.pop();
          const module = this.pop();
          if (typeof module !== "string" || typeof name !== "string")
            throw new Error("STACK_GLOBAL args are not strings");
          this.push({ kind: "class", module, name });
          break;
        }
        case 0x52: {
          // REDUCE
          const args = this.pop();
          const cls = this.pop();
          this.push(this.reduce(cls, args));
          break;
        }
        case 0x81: {
          // NEWOBJ
          const args = this.pop();
          const cls = this.pop();
          this.push(this.newobj(cls, args));
          break;
        }
        case 0x62: // BUILD
          this.buildOp();
          break;
        // protocol 0 text opcodes, kept for very old dumps
        case 0x49: {
          // INT
          const s = this.line();
          if (s === "01") this.push(true);
          else if (s === "00") this.push(false);
          else this.push(parseInt(s, 10));
          break;
        }
        case 0x4c: // LONG
          this.push(parseInt(this.line().replace(/L$/, ""), 10));
          break;
        case 0x46: // FLOAT
          this.push(parseFloat(this.line()));
          break;
        case 0x53: {
          // STRING: quoted, escaped py2 str
          const s = this.line();
          const body = s.replace(/^['"]|['"]$/g, "");
          const unescaped = body.replace(
            /\\x([0-9a-fA-F]{2})|\\([\\'"nrt])/g,
            (_m, hex, ch) => {
              if (hex !== undefined) return String.fromCharCode(parseInt(hex, 16));
              return { "\\": "\\", "'": "'", '"': '"', n: "\n", r: "\r", t: "\t" }[
                ch as string
              ] as string;
            }
          );
          this.push(latin1Encode(unescaped));
          break;
        }
        case 0x56: // UNICODE
          this.push(this.line());
          break;
        case 0x70: // PUT
          this.memo[parseInt(this.line(), 10)] = this.stack[this.stack.length - 1];
          break;
        case 0x67: // GET
          this.push(this.memo[parseInt(this.line(), 10)]);
          break;
        default:
          throw new Error(
            `unsupported pickle opcode 0x${op.toString(16)} at offset ${this.pos - 1}`
          );
      }
    }
  }
}

export function loads(buf: Uint8Array): PyValue {
  return new Unpickler(buf).load();
}

/** Dict lookup helper: pickle dicts come back as Map with primitive keys. */
export function dictGet(m: PyValue, key: string | number): PyValue {
  if (!(m instanceof Map)) throw new Error("expected a dict");
  for (const [k, v] of m) if (k === key) return v;
  throw new Error(`dict has no key '${key}'`);
}
