/**
 * Corpus text extraction.
 *
 * The corpus is JSON lines; each paper contributes the text to embed:
 * the abstract when present and non-empty, otherwise the title. Papers
 * with neither are skipped and counted, as are lines that cannot yield
 * an id. Duplicate ids keep their first occurrence.
 */
import { readFileSync } from 'node:fs';

import { internId } from './intern.js';

export interface PaperText {
  id: bigint;
  text: string;
  titleFallback: boolean;
}

export interface CorpusTexts {
  papers: PaperText[];
  skipped: number;
  total: number;
}

function usable(value: unknown): string | null {
  return typeof value === 'string' && value.trim() !== '' ? value : null;
}

export function readCorpusTexts(path: string): CorpusTexts {
  const papers: PaperText[] = [];
  const seen = new Set<bigint>();
  let skipped = 0;
  let total = 0;
  for (const line of readFileSync(path, 'utf8').split('\n')) {
    if (line.trim() === '') continue;
    total += 1;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch {
      skipped += 1;
      continue;
    }
    if (typeof obj !== 'object' || obj === null || Array.isArray(obj)) {
      skipped += 1;
      continue;
    }
    const rec = obj as Record<string, unknown>;
    const rawId = rec['id'];
    if (typeof rawId !== 'string' && typeof rawId !== 'number') {
      skipped += 1;
      continue;
    }
    let id: bigint;
    try {
      id = internId(rawId);
    } catch {
      skipped += 1;
      continue;
    }
    const abstract = usable(rec['abstract']);
    const title = usable(rec['title']);
    const text = abstract ?? title;
    if (text === null || seen.has(id)) {
      skipped += 1;
      continue;
    }
    seen.add(id);
    papers.push({ id, text, titleFallback: abstract === null });
  }
  return { papers, skipped, total };
}
