import { createHash } from 'node:crypto';

// ids above 2^53 lose precision as JS numbers / JSON integers
const MAX_NUMERIC_ID = 2n ** 53n;

const DECIMAL_RE = /^(0|[1-9][0-9]*)$/;

/**
 * Intern an external paper id to the u64 key used by the embedding file.
 *
 * Canonical decimal ids below 2^53 map to their numeric value; every
 * other string maps to the first 8 bytes (little-endian) of its SHA-256
 * digest. Non-canonical digit strings like "007" take the hash route,
 * so they never collide with the number 7.
 */
export function internId(raw: string | number): bigint {
  if (typeof raw === 'number') {
    if (!Number.isInteger(raw) || raw < 0 || BigInt(raw) >= MAX_NUMERIC_ID) {
      throw new RangeError(`integer id ${raw} outside [0, 2**53)`);
    }
    return BigInt(raw);
  }
  if (DECIMAL_RE.test(raw)) {
    const value = BigInt(raw);
    if (value < MAX_NUMERIC_ID) {
      return value;
    }
  }
  const digest = createHash('sha256').update(raw, 'utf8').digest();
  return digest.readBigUInt64LE(0);
}
