import { mkdtempSync, writeFileSync } from 'fs';
import { tmpdir } from 'os';
import * as path from 'path';
import { describe, expect, it } from 'vitest';

import { extractDirectory, listImageFiles } from '../src/extract';

const FIXTURES = path.join(__dirname, 'fixtures', 'images');

// Readable fixtures in sorted order; broken.png is a candidate that must be
// skipped, notes.txt must not even be listed.
const EXPECTED_IDS = [
  'checker_green',
  'gradient_red',
  'gradient_red_copy',
  'noise_blue',
  'rings',
  'solid_gray',
];

function row(table: { vectors: Float32Array; d: number }, i: number): Float32Array {
  return table.vectors.slice(i * table.d, (i + 1) * table.d);
}

describe('listImageFiles', () => {
  it('lists only image extensions, sorted', () => {
    expect(listImageFiles(FIXTURES)).toEqual([
      'broken.png',
      'checker_green.png',
      'gradient_red.png',
      'gradient_red_copy.png',
      'noise_blue.png',
      'rings.jpg',
      'solid_gray.jpeg',
    ]);
  });
});

describe('extractDirectory', () => {
  it('produces one row per readable image, in sorted-name order', async () => {
    const result = await extractDirectory(FIXTURES, 'compact64');
    expect(result.table.ids).toEqual(EXPECTED_IDS);
    expect(result.table.d).toBe(64);
    expect(result.table.vectors.length).toBe(EXPECTED_IDS.length * 64);
    expect(result.model).toBe('compact64');
    expect(result.layer).toBe('pre_classifier_relu');
  });

  it('skips the unreadable file and says why', async () => {
    const result = await extractDirectory(FIXTURES, 'compact64');
    expect(result.skipped).toHaveLength(1);
    expect(result.skipped[0].file).toBe('broken.png');
    expect(result.skipped[0].reason).toBeTruthy();
  });

  it('gives identical image files identical vectors', async () => {
    const result = await extractDirectory(FIXTURES, 'compact64');
    const original = row(result.table, EXPECTED_IDS.indexOf('gradient_red'));
    const copy = row(result.table, EXPECTED_IDS.indexOf('gradient_red_copy'));
    expect(Array.from(copy)).toEqual(Array.from(original));
  });

  it('gives different images different vectors', async () => {
    const result = await extractDirectory(FIXTURES, 'compact64');
    const a = row(result.table, EXPECTED_IDS.indexOf('checker_green'));
    const b = row(result.table, EXPECTED_IDS.indexOf('noise_blue'));
    expect(Array.from(a)).not.toEqual(Array.from(b));
  });

  it('is deterministic across runs', async () => {
    const first = await extractDirectory(FIXTURES, 'compact64');
    const second = await extractDirectory(FIXTURES, 'compact64');
    expect(Array.from(second.table.vectors)).toEqual(Array.from(first.table.vectors));
  });

  it('is independent of inference batch size', async () => {
    const byOne = await extractDirectory(FIXTURES, 'compact64', 1);
    const byThree = await extractDirectory(FIXTURES, 'compact64', 3);
    const byEight = await extractDirectory(FIXTURES, 'compact64', 8);
    expect(Array.from(byThree.table.vectors)).toEqual(Array.from(byOne.table.vectors));
    expect(Array.from(byEight.table.vectors)).toEqual(Array.from(byOne.table.vectors));
  });

  it('supports the alternative model with its own dimensionality', async () => {
    const result = await extractDirectory(FIXTURES, 'wide128');
    expect(result.table.d).toBe(128);
    expect(result.model).toBe('wide128');
  });

  it('rejects an empty directory', async () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'empty-'));
    await expect(extractDirectory(dir, 'compact64')).rejects.toThrow(/no readable images/);
  });

  it('rejects a directory where every image is unreadable', async () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'allbad-'));
    writeFileSync(path.join(dir, 'junk.png'), 'not a png');
    await expect(extractDirectory(dir, 'compact64')).rejects.toThrow(/no readable images/);
  });

  it('rejects an unknown model by name, listing the known ones', async () => {
    await expect(extractDirectory(FIXTURES, 'vgg19')).rejects.toThrow(/unknown model "vgg19".*compact64/);
  });

  it('rejects a nonsense batch size', async () => {
    await expect(extractDirectory(FIXTURES, 'compact64', 0)).rejects.toThrow(/batch size/);
  });
});
