#!/usr/bin/env node
/** crisis-annotate: offline embedding + dual QA-confidence annotation.
 *
 *   annotate --items raw_texts.jsonl --queries queries.jsonl --out-dir DIR
 *            [--batch-size N] [--threshold 0.8] [--max-tokens 384]
 *
 * Emits events/queries/items/confidences JSONL into DIR; the directory is
 * a complete corpus for the timeline engine (`crisisline validate`).
 */
import * as process from "node:process";

import { annotate } from "./annotate.js";
import { createOfflineBackend } from "./offline.js";
import type { AnnotateOptions } from "./types.js";

function usage(): never {
  console.error(
    "usage: crisis-annotate annotate --items FILE --queries FILE --out-dir DIR" +
    " [--batch-size N] [--threshold T] [--max-tokens N]");
  process.exit(64);
}

function parseArgs(argv: string[]): AnnotateOptions {
  if (argv[0] !== "annotate") usage();
  const opts: Partial<AnnotateOptions> = {
    batchSize: 32, threshold: 0.8, maxTokens: 384,
  };
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) usage();
    switch (flag) {
      case "--items": opts.itemsPath = value; break;
      case "--queries": opts.queriesPath = value; break;
      case "--out-dir": opts.outDir = value; break;
      case "--batch-size": opts.batchSize = Number(value); break;
      case "--threshold": opts.threshold = Number(value); break;
      case "--max-tokens": opts.maxTokens = Number(value); break;
      default: usage();
    }
  }
  if (!opts.itemsPath || !opts.queriesPath || !opts.outDir) usage();
  if (!Number.isFinite(opts.batchSize) || opts.batchSize! < 1) usage();
  return opts as AnnotateOptions;
}

async function main(): Promise<number> {
  const opts = parseArgs(process.argv.slice(2));
  const backend = createOfflineBackend(opts.maxTokens);
  try {
    const stats = await annotate(backend, opts, (m) => console.error(m));
    console.error(
      `annotate: ${stats.texts} texts, ${stats.pairs} pairs scored, ` +
      `${stats.countingPairs} above the dual ${opts.threshold} threshold ` +
      `(backend ${backend.name})`);
    return 0;
  } catch (err) {
    console.error(`annotate: error: ${(err as Error).message}`);
    return 1;
  }
}

main().then((code) => process.exit(code));
