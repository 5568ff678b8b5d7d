import { describe, expect, it } from 'vitest';

import { gaussian, mulberry32 } from '../src/rng';
import { MODELS, loadEmbedder } from '../src/model';

function fixedInput(size: number, seed: number): Float32Array {
  const rng = mulberry32(seed);
  const out = new Float32Array(size * size * 3);
  for (let i = 0; i < out.length; i++) {
    out[i] = rng() * 2 - 1;
  }
  return out;
}

describe('seeded rng', () => {
  it('replays the same stream for the same seed', () => {
    const a = mulberry32(7);
    const b = mulberry32(7);
    const streamA = Array.from({ length: 100 }, () => a());
    const streamB = Array.from({ length: 100 }, () => b());
    expect(streamB).toEqual(streamA);
    expect(new Set(streamA).size).toBeGreaterThan(90);
  });

  it('stays in [0, 1) and gaussians are roughly centered', () => {
    const rng = mulberry32(11);
    let sum = 0;
    for (let i = 0; i < 2000; i++) {
      const u = rng();
      expect(u).toBeGreaterThanOrEqual(0);
      expect(u).toBeLessThan(1);
      sum += gaussian(rng);
    }
    expect(Math.abs(sum / 2000)).toBeLessThan(0.1);
  });
});

describe('loadEmbedder', () => {
  it('builds the same function twice: identical outputs for identical input', async () => {
    const input = fixedInput(MODELS.compact64.inputSize, 3);
    const first = await loadEmbedder('compact64');
    const a = first.embed(input, 1);
    first.dispose();
    const second = await loadEmbedder('compact64');
    const b = second.embed(input, 1);
    second.dispose();
    expect(Array.from(b)).toEqual(Array.from(a));
  });

  it('produces finite, non-negative, non-degenerate embeddings', async () => {
    const embedder = await loadEmbedder('compact64');
    const out = embedder.embed(fixedInput(64, 5), 1);
    embedder.dispose();
    expect(out.length).toBe(64);
    let positive = 0;
    for (const v of out) {
      expect(Number.isFinite(v)).toBe(true);
      expect(v).toBeGreaterThanOrEqual(0); // embeddings are ReLU activations
      if (v > 0) positive++;
    }
    expect(positive).toBeGreaterThan(8);
  });

  it('matches each registry entry to its declared shape', async () => {
    for (const spec of Object.values(MODELS)) {
      const embedder = await loadEmbedder(spec.name);
      const out = embedder.embed(fixedInput(spec.inputSize, 1), 1);
      embedder.dispose();
      expect(out.length).toBe(spec.dim);
    }
  });

  it('rejects a mis-sized batch', async () => {
    const embedder = await loadEmbedder('compact64');
    try {
      expect(() => embedder.embed(new Float32Array(10), 1)).toThrow(/batch length/);
    } finally {
      embedder.dispose();
    }
  });
});
