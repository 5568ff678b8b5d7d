/**
 * Swappable image-embedding models.
 *
 * Each model is a small VGG-style stack -- repeated 3x3 conv / ReLU / 2x2
 * max-pool stages, global average pooling, then a dense layer whose ReLU
 * output is the embedding ("the last activation before a classifier head").
 * Weights are generated from a fixed per-model seed, so a given model name
 * denotes one concrete function: the same image yields the same vector on
 * every run and every machine.  A genuinely pretrained network drops in by
 * adding a registry entry whose builder loads stored weights instead.
 */

import * as tf from '@tensorflow/tfjs';
import { heWeights, mulberry32 } from './rng';

export interface ModelSpec {
  name: string;
  /** Square input side length in pixels. */
  inputSize: number;
  /** Embedding dimensionality. */
  dim: number;
  /** Which activation the vector is read from; recorded in the sidecar. */
  layerName: string;
  seed: number;
  convWidths: number[];
}

export const MODELS: Record<string, ModelSpec> = {
  compact64: {
    name: 'compact64',
    inputSize: 64,
    dim: 64,
    layerName: 'pre_classifier_relu',
    seed: 1001,
    convWidths: [12, 24, 48],
  },
  wide128: {
    name: 'wide128',
    inputSize: 96,
    dim: 128,
    layerName: 'pre_classifier_relu',
    seed: 2002,
    convWidths: [16, 32, 64],
  },
};

export function modelNames(): string[] {
  return Object.keys(MODELS);
}

export interface Embedder {
  spec: ModelSpec;
  /** Embed a batch of n model inputs (n * size * size * 3 floats). */
  embed(batch: Float32Array, n: number): Float32Array;
  dispose(): void;
}

export async function loadEmbedder(name: string): Promise<Embedder> {
  const spec = MODELS[name];
  if (!spec) {
    throw new Error(`unknown model "${name}" (available: ${modelNames().join(', ')})`);
  }
  await tf.ready();

  // One fixed stream of weights per model; creation order is part of the
  // model definition.
  const rng = mulberry32(spec.seed);
  const convKernels: tf.Tensor4D[] = [];
  let channels = 3;
  for (const width of spec.convWidths) {
    const fanIn = 3 * 3 * channels;
    convKernels.push(
      tf.tensor4d(heWeights(rng, fanIn * width, fanIn), [3, 3, channels, width]),
    );
    channels = width;
  }
  const denseW = tf.tensor2d(
    heWeights(rng, channels * spec.dim, channels),
    [channels, spec.dim],
  );

  return {
    spec,
    embed(batch: Float32Array, n: number): Float32Array {
      if (batch.length !== n * spec.inputSize * spec.inputSize * 3) {
        throw new Error(
          `batch length ${batch.length} does not match ${n} inputs of ` +
            `${spec.inputSize}x${spec.inputSize}x3`,
        );
      }
      const result = tf.tidy(() => {
        let x: tf.Tensor4D = tf.tensor4d(batch, [n, spec.inputSize, spec.inputSize, 3]);
        for (const kernel of convKernels) {
          x = tf.maxPool(tf.relu(tf.conv2d(x, kernel, 1, 'same')), 2, 2, 'valid');
        }
        const pooled = tf.mean(x, [1, 2]) as tf.Tensor2D; // global average pool
        return tf.relu(tf.matMul(pooled, denseW));
      });
      const data = result.dataSync() as Float32Array;
      result.dispose();
      return Float32Array.from(data);
    },
    dispose(): void {
      convKernels.forEach(k => k.dispose());
      denseW.dispose();
    },
  };
}
