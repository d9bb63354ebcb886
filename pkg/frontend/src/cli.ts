#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportVectors } from "./export.js";
import { RecordKind } from "./corpus.js";

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .scriptName("embed-export")
    .usage("$0 --input corpus.jsonl --output vecs.bin --ids vecs.ids [options]")
    .option("input", { type: "string", demandOption: true, describe: "generic_jsonl corpus/query file" })
    .option("output", { type: "string", demandOption: true, describe: "SPRIGVEC output path" })
    .option("ids", { type: "string", demandOption: true, describe: "ids sidecar output path" })
    .option("model", {
      type: "string",
      default: "hash-bow",
      describe: "encoder: 'hash-bow' (offline) or a sentence-transformer model name",
    })
    .option("batch-size", { type: "number", default: 32 })
    .option("kind", {
      choices: ["passages", "queries", "all"] as const,
      default: "all" as RecordKind,
      describe: "which record kinds of the input to encode",
    })
    .option("hash-dim", { type: "number", default: 256, describe: "dimensionality for hash-bow" })
    .strict()
    .help()
    .parse();

  try {
    const result = await exportVectors({
      input: argv.input,
      model: argv.model,
      batchSize: argv["batch-size"],
      outVectors: argv.output,
      outIds: argv.ids,
      kind: argv.kind as RecordKind,
      hashDim: argv["hash-dim"],
    });
    console.log(
      `wrote ${result.count} x ${result.dim} vectors (${result.model}) -> ${argv.output}`
    );
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

main().then((code) => process.exit(code));
