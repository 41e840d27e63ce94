#!/usr/bin/env node
/**
 * embed-export: encode dataset sentences and write an EMB1 embedding file.
 *
 * Usage:
 *   node dist/src/cli.js --input data.tsv --format two-column-tsv \
 *       --encoder hashed:256 --out data.emb1 [--batch-size 32] [--max-len 64]
 *
 * Exit codes: 0 success, 1 operational error, 2 usage error.
 */

import { runExport, ExportJob } from "./export.js";
import { EncoderLoadFailure } from "./encoders.js";

const USAGE =
  "usage: embed-export --input FILE --format olid-tsv|two-column-tsv|text-lines " +
  "--encoder SPEC --out FILE [--batch-size N] [--max-len N]";

function parseArgs(argv: string[]): ExportJob {
  const values: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new UsageError(`bad argument: ${flag}`);
    }
    values[flag.slice(2)] = value;
  }
  for (const required of ["input", "format", "encoder", "out"]) {
    if (!(required in values)) {
      throw new UsageError(`missing --${required}`);
    }
  }
  if (
    values.format !== "olid-tsv" &&
    values.format !== "two-column-tsv" &&
    values.format !== "text-lines"
  ) {
    throw new UsageError(`unknown format: ${values.format}`);
  }
  const batchSize = values["batch-size"] ? Number(values["batch-size"]) : 32;
  const maxLen = values["max-len"] ? Number(values["max-len"]) : 64;
  if (!Number.isInteger(batchSize) || !Number.isInteger(maxLen)) {
    throw new UsageError("--batch-size and --max-len must be integers");
  }
  return {
    input: values.input,
    format: values.format,
    encoder: values.encoder,
    out: values.out,
    batchSize,
    maxLen,
  };
}

class UsageError extends Error {}

async function main(): Promise<number> {
  let job: ExportJob;
  try {
    job = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    console.error(USAGE);
    return 2;
  }
  try {
    const result = await runExport(job);
    console.log(
      `wrote ${result.count} embeddings (dim ${result.dim}, encoder ${result.encoder}) to ${job.out}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof EncoderLoadFailure) {
      console.error(`encoder error: ${err.message}`);
    } else {
      console.error(err instanceof Error ? err.message : String(err));
    }
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
