/**
 * Sentence encoders, pluggable by model identifier.
 *
 * The built-in family is a deterministic feature-hashing encoder:
 * unigram and bigram token features are hashed into signed buckets and
 * the bucket vector is L2-normalized. It loads no weights, so the same
 * text maps to the same vector on every machine, which is exactly the
 * property the downstream cosine/φ/θ math depends on. Heavier
 * transformer encoders can be registered under their own identifiers
 * without touching the callers.
 */
import { createHash } from 'node:crypto';

export interface SentenceEncoder {
  readonly id: string;
  readonly dim: number;
  encodeBatch(texts: string[]): Float32Array[];
}

export function tokenize(text: string): string[] {
  return text.toLowerCase().split(/[^a-z0-9]+/).filter((t) => t !== '');
}

function hashFeature(feature: string, dim: number): { bucket: number; sign: number } {
  const digest = createHash('sha256').update(feature, 'utf8').digest();
  return {
    bucket: digest.readUInt32LE(0) % dim,
    sign: (digest[4]! & 1) === 0 ? 1 : -1,
  };
}

export class HashingEncoder implements SentenceEncoder {
  readonly id: string;
  readonly dim: number;

  constructor(dim: number) {
    if (!Number.isInteger(dim) || dim < 2) {
      throw new RangeError(`encoder dimension must be an integer >= 2, got ${dim}`);
    }
    this.id = `hash-${dim}`;
    this.dim = dim;
  }

  encodeOne(text: string): Float32Array {
    const acc = new Float64Array(this.dim);
    const tokens = tokenize(text);
    for (let i = 0; i < tokens.length; i++) {
      const uni = hashFeature(tokens[i]!, this.dim);
      acc[uni.bucket] = acc[uni.bucket]! + uni.sign;
      if (i + 1 < tokens.length) {
        const bi = hashFeature(`${tokens[i]} ${tokens[i + 1]}`, this.dim);
        acc[bi.bucket] = acc[bi.bucket]! + bi.sign;
      }
    }
    let sq = 0;
    for (const v of acc) sq += v * v;
    if (sq === 0) {
      // never emit a zero vector; the file format rejects them anyway
      throw new RangeError(`text has no encodable tokens: ${JSON.stringify(text.slice(0, 40))}`);
    }
    const norm = Math.sqrt(sq);
    const out = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) out[i] = acc[i]! / norm;
    return out;
  }

  encodeBatch(texts: string[]): Float32Array[] {
    return texts.map((t) => this.encodeOne(t));
  }
}

const HASH_MODEL_RE = /^hash-([0-9]+)$/;

export const DEFAULT_MODEL = 'hash-256';

/** Look up an encoder by model identifier. */
export function resolveEncoder(model: string): SentenceEncoder {
  const m = HASH_MODEL_RE.exec(model);
  if (m) {
    return new HashingEncoder(parseInt(m[1]!, 10));
  }
  throw new Error(`unknown encoder model "${model}" (built in: hash-<dim>)`);
}
