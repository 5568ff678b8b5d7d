/**
 * Image loading: PNG and JPEG files become RGB float arrays in [0, 1],
 * bilinearly resized to whatever square input the chosen model expects.
 */

import { readFileSync } from 'fs';
import { PNG } from 'pngjs';
import * as jpeg from 'jpeg-js';

export interface DecodedImage {
  width: number;
  height: number;
  /** Row-major RGB triples, values in [0, 1]; length = width * height * 3. */
  rgb: Float32Array;
}

function rgbaToRgb(data: Uint8Array, width: number, height: number): DecodedImage {
  const rgb = new Float32Array(width * height * 3);
  for (let i = 0, j = 0; i < width * height; i++, j += 4) {
    rgb[i * 3] = data[j] / 255;
    rgb[i * 3 + 1] = data[j + 1] / 255;
    rgb[i * 3 + 2] = data[j + 2] / 255;
  }
  return { width, height, rgb };
}

/** Decode one image file by extension. Throws on anything unreadable. */
export function decodeImage(path: string): DecodedImage {
  const lower = path.toLowerCase();
  const buf = readFileSync(path);
  if (lower.endsWith('.png')) {
    const png = PNG.sync.read(buf);
    return rgbaToRgb(png.data, png.width, png.height);
  }
  if (lower.endsWith('.jpg') || lower.endsWith('.jpeg')) {
    const img = jpeg.decode(buf, { useTArray: true, maxMemoryUsageInMB: 64 });
    return rgbaToRgb(img.data, img.width, img.height);
  }
  throw new Error(`unsupported image format: ${path}`);
}

/** Bilinear resample to a square size x size image. */
export function resizeBilinear(img: DecodedImage, size: number): DecodedImage {
  if (img.width === size && img.height === size) {
    return { width: size, height: size, rgb: Float32Array.from(img.rgb) };
  }
  const out = new Float32Array(size * size * 3);
  // Align corners: source coordinates span the full pixel grid.
  const sx = size > 1 ? (img.width - 1) / (size - 1) : 0;
  const sy = size > 1 ? (img.height - 1) / (size - 1) : 0;
  for (let y = 0; y < size; y++) {
    const fy = y * sy;
    const y0 = Math.floor(fy);
    const y1 = Math.min(y0 + 1, img.height - 1);
    const wy = fy - y0;
    for (let x = 0; x < size; x++) {
      const fx = x * sx;
      const x0 = Math.floor(fx);
      const x1 = Math.min(x0 + 1, img.width - 1);
      const wx = fx - x0;
      for (let c = 0; c < 3; c++) {
        const v00 = img.rgb[(y0 * img.width + x0) * 3 + c];
        const v01 = img.rgb[(y0 * img.width + x1) * 3 + c];
        const v10 = img.rgb[(y1 * img.width + x0) * 3 + c];
        const v11 = img.rgb[(y1 * img.width + x1) * 3 + c];
        const top = v00 + (v01 - v00) * wx;
        const bottom = v10 + (v11 - v10) * wx;
        out[(y * size + x) * 3 + c] = top + (bottom - top) * wy;
      }
    }
  }
  return { width: size, height: size, rgb: out };
}

/**
 * Resize to the model's input and map [0, 1] -> [-1, 1], the convention the
 * embedding models are defined under.
 */
export function toModelInput(img: DecodedImage, size: number): Float32Array {
  const resized = resizeBilinear(img, size);
  const out = new Float32Array(resized.rgb.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = resized.rgb[i] * 2 - 1;
  }
  return out;
}
