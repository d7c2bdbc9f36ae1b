// EMB1 binary embedding file: magic "EMB1", version u16, dimension u32,
// record count u64, then per record a u16 id length, the UTF-8 frame id and
// dimension float32 components. All integers and floats little-endian, no
// padding. This layout is the wire contract with the retrieval engine; keep
// it byte-compatible.

import { InvalidJobError } from "./errors.js";

const MAGIC = "EMB1";
const VERSION = 1;

export interface EmbeddingRecord {
  frameId: string;
  vector: Float32Array;
}

export function encodeEmb1(dimension: number, records: EmbeddingRecord[]): Buffer {
  if (!Number.isInteger(dimension) || dimension < 1) {
    throw new InvalidJobError(`dimension must be a positive integer, got ${dimension}`);
  }
  const seen = new Set<string>();
  const chunks: Buffer[] = [];

  const header = Buffer.alloc(4 + 2 + 4 + 8);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt16LE(VERSION, 4);
  header.writeUInt32LE(dimension, 6);
  header.writeBigUInt64LE(BigInt(records.length), 10);
  chunks.push(header);

  for (const rec of records) {
    if (seen.has(rec.frameId)) {
      throw new InvalidJobError(`duplicate frame id ${JSON.stringify(rec.frameId)}`);
    }
    seen.add(rec.frameId);
    if (rec.vector.length !== dimension) {
      throw new InvalidJobError(
        `frame ${rec.frameId}: ${rec.vector.length} components, expected ${dimension}`,
      );
    }
    for (const x of rec.vector) {
      if (!Number.isFinite(x)) {
        throw new InvalidJobError(`frame ${rec.frameId}: non-finite component`);
      }
    }
    const id = Buffer.from(rec.frameId, "utf-8");
    if (id.length > 0xffff) {
      throw new InvalidJobError(`frame id longer than 65535 bytes`);
    }
    const head = Buffer.alloc(2);
    head.writeUInt16LE(id.length, 0);
    const body = Buffer.alloc(4 * dimension);
    for (let j = 0; j < dimension; j++) {
      body.writeFloatLE(rec.vector[j], 4 * j);
    }
    chunks.push(head, id, body);
  }
  return Buffer.concat(chunks);
}

export function decodeEmb1(buf: Buffer): { dimension: number; records: EmbeddingRecord[] } {
  if (buf.length < 18 || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new InvalidJobError("not an EMB1 file");
  }
  const version = buf.readUInt16LE(4);
  if (version !== VERSION) {
    throw new InvalidJobError(`unsupported EMB1 version ${version}`);
  }
  const dimension = buf.readUInt32LE(6);
  const count = Number(buf.readBigUInt64LE(10));
  const records: EmbeddingRecord[] = [];
  let off = 18;
  for (let i = 0; i < count; i++) {
    const idLen = buf.readUInt16LE(off);
    off += 2;
    const frameId = buf.toString("utf-8", off, off + idLen);
    off += idLen;
    const vector = new Float32Array(dimension);
    for (let j = 0; j < dimension; j++) {
      vector[j] = buf.readFloatLE(off);
      off += 4;
    }
    records.push({ frameId, vector });
  }
  if (off !== buf.length) {
    throw new InvalidJobError(`${buf.length - off} trailing bytes after last record`);
  }
  return { dimension, records };
}
