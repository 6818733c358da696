#!/usr/bin/env node
/**
 * Command-line entry point.
 *
 * Exit codes: 0 success, 1 usage error, 2 data or filesystem error.
 */

import { pathToFileURL } from "node:url";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { availableEncoders } from "./encoder.js";
import { ExportError } from "./errors.js";
import { runExport, TOOL_VERSION } from "./export.js";

const PROG = "export-embeddings";

/** Parse `argv` (without the node/script prefix) and run the export. */
export function main(argv: string[]): number {
  let args;
  try {
    args = yargs(argv)
      .scriptName(PROG)
      .usage("$0 --inventory <path>... --encoder <id> --out <file> [--normalize] [--batch 64]")
      .option("inventory", {
        type: "string",
        array: true,
        demandOption: true,
        describe: "inventory JSONL file (repeatable)",
      })
      .option("encoder", {
        type: "string",
        demandOption: true,
        describe: `encoder id (available: ${availableEncoders().join(", ")})`,
      })
      .option("out", {
        type: "string",
        demandOption: true,
        describe: "output embedding store path",
      })
      .option("normalize", {
        type: "boolean",
        default: false,
        describe: "store unit-length vectors",
      })
      .option("batch", {
        type: "number",
        default: 64,
        describe: "sentences encoded per batch",
      })
      .strict()
      .version(TOOL_VERSION)
      .exitProcess(false)
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseSync();
  } catch (exc) {
    console.error(`${PROG}: error: ${(exc as Error).message}`);
    return 1;
  }
  if (args.help === true || args.version === true) {
    return 0;
  }
  if (!Number.isInteger(args.batch) || args.batch < 1) {
    console.error(`${PROG}: error: --batch must be a positive integer`);
    return 1;
  }

  try {
    const result = runExport(
      {
        inventoryPaths: args.inventory,
        encoderId: args.encoder,
        outPath: args.out,
        normalize: args.normalize,
        batchSize: args.batch,
      },
      [PROG, ...argv],
    );
    for (const warning of result.warnings) {
      console.error(`${PROG}: warning: ${warning}`);
    }
    console.log(`${PROG}: wrote ${result.count} vectors (dim ${result.dim}) to ${result.outPath}`);
    return 0;
  } catch (exc) {
    if (exc instanceof ExportError) {
      console.error(`${PROG}: error: ${exc.message}`);
      return 2;
    }
    throw exc;
  }
}

const entryPath = process.argv[1];
if (entryPath !== undefined && import.meta.url === pathToFileURL(entryPath).href) {
  process.exit(main(hideBin(process.argv)));
}
