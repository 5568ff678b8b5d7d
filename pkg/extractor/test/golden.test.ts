import { mkdtempSync, readFileSync } from 'fs';
import { tmpdir } from 'os';
import * as path from 'path';
import { describe, expect, it } from 'vitest';

import { extractDirectory, writeResult } from '../src/extract';

const FIXTURES = path.join(__dirname, 'fixtures', 'images');
const GOLDEN = path.join(__dirname, '..', 'golden');

// The files under golden/ are committed outputs of this extractor over the
// committed fixture images.  They are also what the manifold pipeline's
// loader is tested against, so regenerating them is an interface change:
// if these comparisons fail, either restore the old behavior or regenerate
// the goldens *and* the copies shipped to the consumer's test data.
describe('golden outputs', () => {
  it('reproduces the CSV golden byte for byte', async () => {
    const result = await extractDirectory(FIXTURES, 'compact64');
    const out = path.join(mkdtempSync(path.join(tmpdir(), 'golden-')), 'emb.csv');
    writeResult(result, out, 'csv');
    expect(readFileSync(out, 'utf8')).toBe(
      readFileSync(path.join(GOLDEN, 'images_compact64.csv'), 'utf8'),
    );
  });

  it('reproduces the binary golden and its sidecar byte for byte', async () => {
    const result = await extractDirectory(FIXTURES, 'compact64');
    const out = path.join(mkdtempSync(path.join(tmpdir(), 'golden-')), 'emb.bin');
    writeResult(result, out, 'bin');
    expect(readFileSync(out).equals(readFileSync(path.join(GOLDEN, 'images_compact64.bin')))).toBe(
      true,
    );
    expect(readFileSync(out + '.json', 'utf8')).toBe(
      readFileSync(path.join(GOLDEN, 'images_compact64.bin.json'), 'utf8'),
    );
  });
});
