// Usage: render --kind <k> --in <csv> --out <img>
// Exit codes: 0 ok, 1 usage error, 2 schema/data error.

import { resolve } from "node:path";
import { parseArgs } from "node:util";
import { fileURLToPath } from "node:url";

import { SchemaError } from "./csv.js";
import { FIGURE_KINDS, render } from "./figures.js";

const USAGE = `usage: render --kind <${FIGURE_KINDS.join("|")}> --in <csv> --out <svg>`;

export function runCli(argv: string[]): number {
  let positionals: string[];
  let values: { kind?: string; in?: string; out?: string };
  try {
    ({ positionals, values } = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
      },
      allowPositionals: true,
    }));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    console.error(USAGE);
    return 1;
  }
  if (positionals.length !== 1 || positionals[0] !== "render"
      || !values.kind || !values.in || !values.out) {
    console.error(USAGE);
    return 1;
  }
  try {
    const path = render({
      inputCsv: values.in,
      figureKind: values.kind,
      outputPath: values.out,
    });
    console.log(`wrote ${path}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || err instanceof RangeError) {
      console.error(err.message);
      return 2;
    }
    console.error(err instanceof Error ? err.message : String(err));
    return 2;
  }
}

const isMain = process.argv[1] !== undefined
  && fileURLToPath(import.meta.url) === resolve(process.argv[1]);
if (isMain) {
  process.exit(runCli(process.argv.slice(2)));
}
