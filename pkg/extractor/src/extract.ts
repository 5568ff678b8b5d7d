/**
 * Directory-to-embeddings conversion.
 *
 * Row order is the sorted list of file names -- never the decode or batch
 * order -- so output is reproducible and independent of how inference is
 * chunked.  Unreadable files are skipped and reported, not fatal; an empty
 * result is an error.
 */

import { readdirSync } from 'fs';
import * as path from 'path';
import { decodeImage, toModelInput } from './image';
import { Embedder, loadEmbedder } from './model';
import { EmbeddingTable, writeBinary, writeCsv } from './formats';

const IMAGE_EXTENSIONS = new Set(['.png', '.jpg', '.jpeg']);

export interface ExtractionResult {
  table: EmbeddingTable;
  model: string;
  layer: string;
  /** Files that could not be decoded, with the reason each was skipped. */
  skipped: { file: string; reason: string }[];
}

export function listImageFiles(dir: string): string[] {
  return readdirSync(dir)
    .filter(name => IMAGE_EXTENSIONS.has(path.extname(name).toLowerCase()))
    .sort();
}

export async function extractDirectory(
  dir: string,
  modelName: string,
  batchSize = 8,
): Promise<ExtractionResult> {
  if (batchSize < 1) {
    throw new Error(`batch size must be >= 1, got ${batchSize}`);
  }
  const embedder = await loadEmbedder(modelName);
  try {
    return await runExtraction(dir, embedder, batchSize);
  } finally {
    embedder.dispose();
  }
}

async function runExtraction(
  dir: string,
  embedder: Embedder,
  batchSize: number,
): Promise<ExtractionResult> {
  const { inputSize, dim, name, layerName } = embedder.spec;
  const files = listImageFiles(dir);

  const skipped: { file: string; reason: string }[] = [];
  const ids: string[] = [];
  const inputs: Float32Array[] = [];
  for (const file of files) {
    try {
      const img = decodeImage(path.join(dir, file));
      inputs.push(toModelInput(img, inputSize));
      // The id is the file name without its extension, matching how clip
      // ids name their source files elsewhere in the pipeline.
      ids.push(path.basename(file, path.extname(file)));
    } catch (err) {
      skipped.push({ file, reason: err instanceof Error ? err.message : String(err) });
    }
  }
  if (ids.length === 0) {
    throw new Error(`no readable images in ${dir} (${files.length} candidates)`);
  }

  const perInput = inputSize * inputSize * 3;
  const vectors = new Float32Array(ids.length * dim);
  for (let start = 0; start < ids.length; start += batchSize) {
    const n = Math.min(batchSize, ids.length - start);
    const batch = new Float32Array(n * perInput);
    for (let i = 0; i < n; i++) {
      batch.set(inputs[start + i], i * perInput);
    }
    vectors.set(embedder.embed(batch, n), start * dim);
  }

  return {
    table: { ids, vectors, d: dim },
    model: name,
    layer: layerName,
    skipped,
  };
}

export function writeResult(
  result: ExtractionResult,
  outPath: string,
  format: 'csv' | 'bin',
): void {
  if (format === 'csv') {
    writeCsv(outPath, result.table);
  } else {
    writeBinary(outPath, result.table, { model: result.model, layer: result.layer });
  }
}
