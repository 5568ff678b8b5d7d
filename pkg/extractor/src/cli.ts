#!/usr/bin/env node
/**
 * Command-line entry point:
 *
 *   embed-extract --images DIR --out FILE [--format csv|bin] [--model NAME]
 *
 * Converts every readable PNG/JPEG in DIR into one embedding row and writes
 * the matrix in a format the manifold pipeline loads directly.
 */

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { modelNames } from './model';
import { extractDirectory, writeResult } from './extract';

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .scriptName('embed-extract')
    .option('images', {
      type: 'string',
      demandOption: true,
      describe: 'directory of PNG/JPEG images',
    })
    .option('out', {
      type: 'string',
      demandOption: true,
      describe: 'output file (bin format also writes OUT.json)',
    })
    .option('format', {
      choices: ['csv', 'bin'] as const,
      default: 'csv' as const,
      describe: 'embedding file format',
    })
    .option('model', {
      type: 'string',
      default: 'compact64',
      choices: modelNames(),
      describe: 'embedding model',
    })
    .option('batch', {
      type: 'number',
      default: 8,
      describe: 'inference batch size (does not affect output)',
    })
    .strict()
    .help()
    .parse();

  const result = await extractDirectory(argv.images, argv.model, argv.batch);
  writeResult(result, argv.out, argv.format);

  console.log(`images: ${result.table.ids.length}`);
  console.log(`dim: ${result.table.d}`);
  console.log(`model: ${result.model} (${result.layer})`);
  console.log(`out: ${argv.out}`);
  for (const skip of result.skipped) {
    console.error(`skipped ${skip.file}: ${skip.reason}`);
  }
  return 0;
}

main()
  .then(code => {
    process.exitCode = code;
  })
  .catch(err => {
    console.error(err instanceof Error ? err.message : String(err));
    process.exitCode = 1;
  });
