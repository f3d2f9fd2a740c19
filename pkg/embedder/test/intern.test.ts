import { describe, expect, it } from 'vitest';

import { internId } from '../src/intern.js';

describe('internId', () => {
  it('keeps small integers', () => {
    expect(internId(0)).toBe(0n);
    expect(internId(7)).toBe(7n);
    expect(internId(9007199254740991)).toBe(9007199254740991n);
  });

  it('keeps canonical decimal strings', () => {
    expect(internId('0')).toBe(0n);
    expect(internId('123456789')).toBe(123456789n);
  });

  it('rejects out-of-range numbers', () => {
    expect(() => internId(-1)).toThrow(RangeError);
    expect(() => internId(9007199254740992)).toThrow(RangeError);
    expect(() => internId(1.5)).toThrow(RangeError);
  });

  // values frozen from an independent SHA-256 computation
  it('hashes non-canonical and non-decimal strings', () => {
    expect(internId('x7')).toBe(15996185185480340364n);
    expect(internId('007')).toBe(868485766308470626n);
    expect(internId('paper-abc')).toBe(1490524298699373555n);
    expect(internId('9007199254740992')).toBe(7654474322011652550n);
  });

  it('separates "007" from the number 7', () => {
    expect(internId('007')).not.toBe(internId(7));
    expect(internId('7')).toBe(internId(7));
  });
});
