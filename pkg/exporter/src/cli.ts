#!/usr/bin/env node
// Usage: export --model <name> --images <dir> --out <file> [--batch N]
// (the leading "export" verb is optional when invoked via the embed-export
// binary). Writes an EMB1 embedding file plus a <out>.meta.json sidecar
// recording which model produced it.

import { pathToFileURL } from "url";

import { ExporterError } from "./errors.js";
import { runExport } from "./export.js";

const USAGE =
  "usage: export --model <name> --images <dir> --out <file> [--batch N]";

interface ParsedArgs {
  model: string;
  images: string;
  out: string;
  batch: number;
}

export function parseArgs(argv: string[]): ParsedArgs {
  const args = argv[0] === "export" ? argv.slice(1) : [...argv];
  const flags: Record<string, string> = {};
  for (let i = 0; i < args.length; i += 2) {
    const flag = args[i];
    const value = args[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new UsageError(`bad argument ${JSON.stringify(flag)}\n${USAGE}`);
    }
    flags[flag.slice(2)] = value;
  }
  const known = new Set(["model", "images", "out", "batch"]);
  for (const key of Object.keys(flags)) {
    if (!known.has(key)) {
      throw new UsageError(`unknown flag --${key}\n${USAGE}`);
    }
  }
  if (!flags.images || !flags.out) {
    throw new UsageError(`--images and --out are required\n${USAGE}`);
  }
  const batch = flags.batch === undefined ? 16 : Number(flags.batch);
  return {
    model: flags.model ?? "grid-v1",
    images: flags.images,
    out: flags.out,
    batch,
  };
}

export class UsageError extends Error {}

export function main(argv: string[]): number {
  let parsed: ParsedArgs;
  try {
    parsed = parseArgs(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(err.message);
      return 2;
    }
    throw err;
  }
  try {
    const summary = runExport({
      model: parsed.model,
      imageDir: parsed.images,
      outPath: parsed.out,
      batchSize: parsed.batch,
    });
    console.log(
      `wrote ${summary.outPath}: ${summary.count} records, dim ` +
        `${summary.dimension} (${summary.model}); meta in ${summary.metaPath}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof ExporterError) {
      console.error(`error: ${err.name}: ${err.message}`);
      return 1;
    }
    if (err instanceof Error && "code" in err) {
      console.error(`error: IoError: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
