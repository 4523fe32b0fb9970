import { writeFileSync } from "node:fs";
import { resolve } from "node:path";
import { parseArgs } from "node:util";
import { FigureError, SpecError } from "./errors.js";
import { renderFigure } from "./figures.js";
import { loadSpec } from "./spec.js";

const USAGE = `usage: latticejump-figures render <figure.json> [-o <out.svg>]

Renders a figure spec against simulation artifacts. The spec's "input"
path is resolved relative to the spec file. Output goes to -o if given,
else to the spec's "output" field (also spec-relative), else next to the
spec with a .svg extension. Exit codes: 0 ok, 1 artifact or data error,
2 usage or invalid spec.`;

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command === undefined) {
    console.error(USAGE);
    return 2;
  }
  if (command === "-h" || command === "--help") {
    console.log(USAGE);
    return 0;
  }
  if (command !== "render") {
    console.error(`unknown command: ${command}\n${USAGE}`);
    return 2;
  }
  let parsed: { values: { out?: string }; positionals: string[] };
  try {
    parsed = parseArgs({
      args: rest,
      options: { out: { type: "string", short: "o" } },
      allowPositionals: true,
    });
  } catch (err) {
    console.error(`${(err as Error).message}\n${USAGE}`);
    return 2;
  }
  if (parsed.positionals.length !== 1) {
    console.error(USAGE);
    return 2;
  }
  const specPath = parsed.positionals[0];
  try {
    const { spec, baseDir } = loadSpec(specPath);
    const outPath =
      parsed.values.out ??
      (spec.output !== undefined
        ? resolve(baseDir, spec.output)
        : specPath.replace(/\.json$/, "") + ".svg");
    const svg = renderFigure(spec, { baseDir });
    writeFileSync(outPath, svg);
    console.log(`wrote ${outPath} (${Buffer.byteLength(svg)} bytes)`);
    return 0;
  } catch (err) {
    if (err instanceof SpecError) {
      console.error(`spec error: ${err.message}`);
      return 2;
    }
    if (err instanceof FigureError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}
