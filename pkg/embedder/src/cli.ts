#!/usr/bin/env node
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { DEFAULT_MODEL } from './encoder.js';
import { embedCorpus, manifestPath } from './embed.js';

export function main(argv: string[]): number {
  let failed = false;
  yargs(argv)
    .scriptName('laurel-embed')
    .command(
      'embed',
      'encode corpus texts into an embedding file',
      (y) =>
        y
          .option('corpus', { type: 'string', demandOption: true, describe: 'corpus JSONL path' })
          .option('out', { type: 'string', demandOption: true, describe: 'embedding file to write' })
          .option('model', { type: 'string', default: DEFAULT_MODEL, describe: 'encoder identifier' })
          .option('batch-size', { type: 'number', default: 64, describe: 'texts per encoder call' }),
      (args) => {
        try {
          const manifest = embedCorpus({
            corpus: args.corpus,
            out: args.out,
            model: args.model,
            batchSize: args['batch-size'],
          });
          console.log(
            `embedded ${manifest.count} papers (dim=${manifest.dim}, ` +
              `${manifest.titleFallbacks} title fallbacks, ${manifest.skipped} skipped)`,
          );
          console.log(`embeddings -> ${args.out}`);
          console.log(`manifest   -> ${manifestPath(args.out)}`);
        } catch (err) {
          console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
          failed = true;
        }
      },
    )
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      console.error(`error: ${err ? err.message : msg}`);
      failed = true;
    })
    .parseSync();
  return failed ? 1 : 0;
}

process.exitCode = main(hideBin(process.argv));
