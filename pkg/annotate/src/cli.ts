/**
 * Command line: annotate a directory of raw dialogue files.
 *
 *   annotate --in <raw dataset dir> --out <output dir> [--quiet]
 */

import { parseArgs } from "node:util";

import { annotateCorpus } from "./pipeline";

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        out: { type: "string" },
        quiet: { type: "boolean", default: false },
        help: { type: "boolean", short: "h", default: false },
      },
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  if (args.values.help || !args.values.in || !args.values.out) {
    const to = args.values.help ? console.log : console.error;
    to("usage: annotate --in <raw dataset dir> --out <output dir> [--quiet]");
    return args.values.help ? 0 : 2;
  }
  try {
    const summary = annotateCorpus({
      inDir: args.values.in,
      outDir: args.values.out,
      log: args.values.quiet ? () => undefined : (m) => console.warn(m),
    });
    console.log(JSON.stringify(summary, null, 2));
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
