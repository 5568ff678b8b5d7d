/**
 * Embedding-matrix file writers.
 *
 * Two formats, both consumed directly by the manifold pipeline's readers:
 *
 *   csv   -- header `id,v0..v{D-1}`, one row per image, floats rendered in
 *            shortest round-trip decimal form.
 *   bin   -- raw row-major little-endian float32 blob at OUT, plus a JSON
 *            sidecar at OUT.json holding {n, d, ids} and provenance fields
 *            (model and layer names).
 */

import { writeFileSync } from 'fs';

export interface EmbeddingTable {
  ids: string[];
  /** Row-major n x d matrix. */
  vectors: Float32Array;
  d: number;
}

function csvField(value: string): string {
  return /[",\r\n]/.test(value) ? `"${value.replace(/"/g, '""')}"` : value;
}

export function writeCsv(path: string, table: EmbeddingTable): void {
  const { ids, vectors, d } = table;
  const header = ['id', ...Array.from({ length: d }, (_, i) => `v${i}`)];
  const lines = [header.join(',')];
  for (let row = 0; row < ids.length; row++) {
    const fields = [csvField(ids[row])];
    for (let col = 0; col < d; col++) {
      fields.push(String(vectors[row * d + col]));
    }
    lines.push(fields.join(','));
  }
  writeFileSync(path, lines.join('\n') + '\n');
}

export function writeBinary(
  path: string,
  table: EmbeddingTable,
  provenance: { model: string; layer: string },
): void {
  const { ids, vectors, d } = table;
  const blob = Buffer.alloc(vectors.length * 4);
  for (let i = 0; i < vectors.length; i++) {
    blob.writeFloatLE(vectors[i], i * 4);
  }
  writeFileSync(path, blob);
  const sidecar = { n: ids.length, d, ids, model: provenance.model, layer: provenance.layer };
  writeFileSync(path + '.json', JSON.stringify(sidecar, null, 1));
}
