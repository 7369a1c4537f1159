/**
 * CLI: render --fig <id> --csv <path> --out <path>
 *
 * Exit codes: 0 on success, 2 on unknown figure ids, unreadable files, or a
 * CSV that does not match the documented schema.
 */

import { SchemaError } from "./csv.js";
import { renderFile, UnknownFigureError } from "./render.js";

function parseArgs(argv: string[]): { fig: string; csv: string; out: string } {
  if (argv[0] !== "render") {
    throw new UsageError(`unknown command ${argv[0] ?? "(none)"}; expected: render`);
  }
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new UsageError(`malformed arguments near ${key}`);
    }
    flags.set(key.slice(2), value);
  }
  for (const required of ["fig", "csv", "out"]) {
    if (!flags.has(required)) {
      throw new UsageError(`missing --${required}`);
    }
  }
  return { fig: flags.get("fig")!, csv: flags.get("csv")!, out: flags.get("out")! };
}

class UsageError extends Error {}

export async function run(argv: string[]): Promise<number> {
  try {
    const args = parseArgs(argv);
    await renderFile(args.fig, args.csv, args.out);
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (
      err instanceof SchemaError ||
      err instanceof UnknownFigureError ||
      err instanceof UsageError ||
      (err as NodeJS.ErrnoException).code === "ENOENT"
    ) {
      console.error(`error: ${(err as Error).message}`);
      return 2;
    }
    throw err;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("ehcr-figures")) {
  run(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
