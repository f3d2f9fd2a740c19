/** Corpus-to-embedding-file pipeline shared by the CLI and tests. */
import { writeFileSync } from 'node:fs';

import { readCorpusTexts } from './corpus.js';
import { EmbeddingRecord, writeEmbeddings } from './emb1.js';
import { resolveEncoder } from './encoder.js';

export interface EmbedJob {
  corpus: string;
  out: string;
  model: string;
  batchSize: number;
}

export interface EmbedManifest {
  model: string;
  dim: number;
  count: number;
  skipped: number;
  titleFallbacks: number;
}

export function manifestPath(out: string): string {
  return `${out}.manifest.json`;
}

/**
 * Encode every embeddable paper and write the embedding file plus its
 * manifest. Records land in corpus order; batching only sizes the
 * encoder calls and never changes the output.
 */
export function embedCorpus(job: EmbedJob): EmbedManifest {
  if (!Number.isInteger(job.batchSize) || job.batchSize < 1) {
    throw new RangeError(`batch size must be a positive integer, got ${job.batchSize}`);
  }
  const encoder = resolveEncoder(job.model);
  const { papers, skipped, total } = readCorpusTexts(job.corpus);
  const records: EmbeddingRecord[] = [];
  for (let start = 0; start < papers.length; start += job.batchSize) {
    const batch = papers.slice(start, start + job.batchSize);
    const vecs = encoder.encodeBatch(batch.map((p) => p.text));
    for (let i = 0; i < batch.length; i++) {
      records.push({ id: batch[i]!.id, vec: vecs[i]! });
    }
  }
  if (records.length + skipped !== total) {
    throw new Error(`record count ${records.length} + skipped ${skipped} != corpus count ${total}`);
  }
  writeEmbeddings(job.out, encoder.dim, records);
  const manifest: EmbedManifest = {
    model: encoder.id,
    dim: encoder.dim,
    count: records.length,
    skipped,
    titleFallbacks: papers.filter((p) => p.titleFallback).length,
  };
  writeFileSync(manifestPath(job.out), `${JSON.stringify(manifest, null, 2)}\n`);
  return manifest;
}
