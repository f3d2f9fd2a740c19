import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { readCorpusTexts } from '../src/corpus.js';

function corpusFile(lines: string[]): string {
  const path = join(mkdtempSync(join(tmpdir(), 'corpus-')), 'c.jsonl');
  writeFileSync(path, lines.join('\n') + '\n');
  return path;
}

describe('readCorpusTexts', () => {
  it('prefers the abstract and falls back to the title', () => {
    const path = corpusFile([
      JSON.stringify({ id: 1, title: 't1', abstract: 'a1' }),
      JSON.stringify({ id: 2, title: 't2' }),
      JSON.stringify({ id: 3, title: 't3', abstract: '' }),
      JSON.stringify({ id: 4, title: 't4', abstract: '   ' }),
    ]);
    const { papers, skipped, total } = readCorpusTexts(path);
    expect(total).toBe(4);
    expect(skipped).toBe(0);
    expect(papers.map((p) => p.text)).toEqual(['a1', 't2', 't3', 't4']);
    expect(papers.map((p) => p.titleFallback)).toEqual([false, true, true, true]);
  });

  it('skips papers with no embeddable text', () => {
    const path = corpusFile([
      JSON.stringify({ id: 1, title: 'kept' }),
      JSON.stringify({ id: 2 }),
      JSON.stringify({ id: 3, title: '', abstract: '' }),
    ]);
    const { papers, skipped, total } = readCorpusTexts(path);
    expect(papers.map((p) => p.id)).toEqual([1n]);
    expect(skipped).toBe(2);
    expect(total).toBe(3);
  });

  it('skips unparseable lines and bad ids, keeping the count identity', () => {
    const path = corpusFile([
      'not json at all',
      JSON.stringify({ title: 'no id' }),
      JSON.stringify({ id: true, title: 'boolean id' }),
      JSON.stringify({ id: -4, title: 'negative id' }),
      JSON.stringify({ id: 'ok', title: 'fine' }),
    ]);
    const { papers, skipped, total } = readCorpusTexts(path);
    expect(papers).toHaveLength(1);
    expect(skipped).toBe(4);
    expect(papers.length + skipped).toBe(total);
  });

  it('keeps the first record for a duplicated id', () => {
    const path = corpusFile([
      JSON.stringify({ id: 5, title: 'first' }),
      JSON.stringify({ id: '5', title: 'second' }),
    ]);
    const { papers, skipped } = readCorpusTexts(path);
    expect(papers).toHaveLength(1);
    expect(papers[0]!.text).toBe('first');
    expect(skipped).toBe(1);
  });

  it('ignores blank lines', () => {
    const path = corpusFile([JSON.stringify({ id: 1, title: 'x' }), '', '   ']);
    const { total } = readCorpusTexts(path);
    expect(total).toBe(1);
  });
});
