/**
 * Deterministic pseudo-random numbers for weight initialization.
 *
 * The embedding model's weights must be identical on every machine and every
 * run, so the generator is a fixed, well-known 32-bit mixer (mulberry32)
 * rather than Math.random, and gaussians come from a plain Box-Muller
 * transform on top of it.
 */

export type Rng = () => number;

/** mulberry32: fast 32-bit PRNG with a single u32 of state. */
export function mulberry32(seed: number): Rng {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Standard normal samples via Box-Muller on a uniform source. */
export function gaussian(rng: Rng): number {
  let u = 0;
  while (u === 0) {
    u = rng(); // avoid log(0)
  }
  const v = rng();
  return Math.sqrt(-2.0 * Math.log(u)) * Math.cos(2.0 * Math.PI * v);
}

/** He-scaled weight tensor data: N(0, sqrt(2 / fanIn)), as float32. */
export function heWeights(rng: Rng, size: number, fanIn: number): Float32Array {
  const scale = Math.sqrt(2.0 / fanIn);
  const out = new Float32Array(size);
  for (let i = 0; i < size; i++) {
    out[i] = Math.fround(gaussian(rng) * scale);
  }
  return out;
}
