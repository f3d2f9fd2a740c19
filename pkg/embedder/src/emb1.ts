/**
 * Binary embedding file codec.
 *
 * Layout (all little-endian):
 * - 4 bytes: magic "EMB1"
 * - 4 bytes: uint32 vector dimension
 * - 8 bytes: uint64 record count
 * - per record: uint64 paper id, then dim float32 components
 */
import { readFileSync, writeFileSync } from 'node:fs';

export const EMB_MAGIC = Buffer.from('EMB1', 'ascii');

export interface EmbeddingRecord {
  id: bigint;
  vec: Float32Array;
}

/** Serialize records into one EMB1 buffer. */
export function encodeEmbeddings(dim: number, records: EmbeddingRecord[]): Buffer {
  if (!Number.isInteger(dim) || dim <= 0) {
    throw new RangeError(`dimension must be a positive integer, got ${dim}`);
  }
  const buf = Buffer.alloc(16 + records.length * (8 + 4 * dim));
  EMB_MAGIC.copy(buf, 0);
  buf.writeUInt32LE(dim, 4);
  buf.writeBigUInt64LE(BigInt(records.length), 8);
  let off = 16;
  for (const rec of records) {
    if (rec.vec.length !== dim) {
      throw new RangeError(`record ${rec.id}: expected ${dim} floats, found ${rec.vec.length}`);
    }
    let zero = true;
    buf.writeBigUInt64LE(rec.id, off);
    off += 8;
    for (let i = 0; i < dim; i++) {
      const v = rec.vec[i] ?? 0;
      if (!Number.isFinite(v)) {
        throw new RangeError(`record ${rec.id}: non-finite component`);
      }
      if (v !== 0) zero = false;
      buf.writeFloatLE(v, off);
      off += 4;
    }
    // downstream cosine math cannot use a zero vector, refuse to emit one
    if (zero) {
      throw new RangeError(`record ${rec.id}: zero vector`);
    }
  }
  return buf;
}

export function writeEmbeddings(path: string, dim: number, records: EmbeddingRecord[]): void {
  writeFileSync(path, encodeEmbeddings(dim, records));
}

/** Parse an EMB1 file back into records (validation mirror of the writer). */
export function readEmbeddings(path: string): { dim: number; records: EmbeddingRecord[] } {
  const buf = readFileSync(path);
  if (buf.length < 16 || !buf.subarray(0, 4).equals(EMB_MAGIC)) {
    throw new Error(`${path}: not an EMB1 file`);
  }
  const dim = buf.readUInt32LE(4);
  if (dim === 0) {
    throw new Error(`${path}: zero dimension`);
  }
  const count = buf.readBigUInt64LE(8);
  const recordBytes = 8n + 4n * BigInt(dim);
  if (BigInt(buf.length) !== 16n + count * recordBytes) {
    throw new Error(`${path}: truncated or trailing bytes`);
  }
  const records: EmbeddingRecord[] = [];
  let off = 16;
  for (let r = 0n; r < count; r++) {
    const id = buf.readBigUInt64LE(off);
    off += 8;
    const vec = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vec[i] = buf.readFloatLE(off);
      off += 4;
    }
    records.push({ id, vec });
  }
  return { dim, records };
}
