#!/usr/bin/env node
/**
 * Regenerate the committed test fixture images.
 *
 * Content is procedural and seeded, so rerunning this script reproduces the
 * exact same bytes; tests and golden files depend on that.
 */

const { writeFileSync, mkdirSync } = require('fs');
const path = require('path');
const { PNG } = require('pngjs');
const jpeg = require('jpeg-js');

const outDir = path.join(__dirname, '..', 'test', 'fixtures', 'images');
mkdirSync(outDir, { recursive: true });

function mulberry32(seed) {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function makeRgba(size, pixel) {
  const data = Buffer.alloc(size * size * 4);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const [r, g, b] = pixel(x, y);
      const i = (y * size + x) * 4;
      data[i] = r;
      data[i + 1] = g;
      data[i + 2] = b;
      data[i + 3] = 255;
    }
  }
  return data;
}

function writePng(name, size, pixel) {
  const png = new PNG({ width: size, height: size });
  makeRgba(size, pixel).copy(png.data);
  writeFileSync(path.join(outDir, name), PNG.sync.write(png));
  console.log('wrote', name);
}

function writeJpeg(name, size, pixel) {
  const encoded = jpeg.encode({ data: makeRgba(size, pixel), width: size, height: size }, 90);
  writeFileSync(path.join(outDir, name), encoded.data);
  console.log('wrote', name);
}

// A horizontal red gradient, and a byte-identical copy under another name --
// the "identical images give identical vectors" pair.
const gradient = (x, _y) => [Math.round((x / 31) * 255), 30, 30];
writePng('gradient_red.png', 32, gradient);
writePng('gradient_red_copy.png', 32, gradient);

writePng('checker_green.png', 48, (x, y) =>
  (Math.floor(x / 6) + Math.floor(y / 6)) % 2 === 0 ? [20, 200, 60] : [5, 15, 5],
);

const noise = mulberry32(424242);
const noisePixels = [];
for (let i = 0; i < 64 * 64; i++) {
  noisePixels.push([
    Math.floor(noise() * 80),
    Math.floor(noise() * 80),
    120 + Math.floor(noise() * 135),
  ]);
}
writePng('noise_blue.png', 64, (x, y) => noisePixels[y * 64 + x]);

writeJpeg('rings.jpg', 40, (x, y) => {
  const r = Math.hypot(x - 19.5, y - 19.5);
  const on = Math.floor(r / 4) % 2 === 0;
  return on ? [230, 180, 40] : [40, 40, 90];
});

writeJpeg('solid_gray.jpeg', 24, () => [128, 128, 128]);

// Deliberately not a PNG: has the right extension but garbage contents, so
// extraction must skip it and say why.
writeFileSync(path.join(outDir, 'broken.png'), Buffer.from('this is not a png'));
console.log('wrote broken.png');

// Not an image extension at all; the directory listing must ignore it.
writeFileSync(path.join(outDir, 'notes.txt'), 'fixture inventory\n');
console.log('wrote notes.txt');
