import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, afterEach, describe, expect, it, vi } from "vitest";
import { main } from "../src/cli.js";
import { renderFigure } from "../src/figures.js";
import { loadSpec } from "../src/spec.js";

const SPECS = fileURLToPath(new URL("../specs/", import.meta.url));
const FIXTURES = fileURLToPath(new URL("./fixtures/", import.meta.url));
const work = mkdtempSync(join(tmpdir(), "figures-cli-"));

afterAll(() => rmSync(work, { recursive: true, force: true }));
afterEach(() => vi.restoreAllMocks());

function quiet() {
  const log = vi.spyOn(console, "log").mockImplementation(() => {});
  const error = vi.spyOn(console, "error").mockImplementation(() => {});
  return { log, error };
}

describe("render command", () => {
  it("writes the same bytes the library produces", () => {
    const { log } = quiet();
    const specPath = join(SPECS, "correlation-trace.json");
    const out = join(work, "trace.svg");
    expect(main(["render", specPath, "-o", out])).toBe(0);
    const { spec, baseDir } = loadSpec(specPath);
    expect(readFileSync(out, "utf8")).toBe(renderFigure(spec, { baseDir }));
    expect(log).toHaveBeenCalledOnce();
    expect(log.mock.calls[0][0]).toContain("trace.svg");
  });

  it("renders every shipped spec kind", () => {
    quiet();
    for (const name of [
      "oscillation-heatmap.json",
      "correlation-density.json",
      "variance-curve.json",
    ]) {
      const out = join(work, name.replace(".json", ".svg"));
      expect(main(["render", join(SPECS, name), "--out", out])).toBe(0);
      expect(readFileSync(out, "utf8").startsWith("<svg ")).toBe(true);
    }
  });

  it("falls back to the spec's output field, resolved next to the spec", () => {
    quiet();
    const specPath = join(work, "with-output.json");
    writeFileSync(
      specPath,
      JSON.stringify({
        kind: "trace_panel",
        input: join(FIXTURES, "correlation"),
        source: { trajectory: 0 },
        columns: ["n_2"],
        output: "from-spec.svg",
      }),
    );
    expect(main(["render", specPath])).toBe(0);
    expect(readFileSync(join(work, "from-spec.svg"), "utf8").startsWith("<svg ")).toBe(
      true,
    );
  });

  it("exits 2 on a missing or invalid spec", () => {
    const { error } = quiet();
    expect(main(["render", join(work, "absent.json")])).toBe(2);
    expect(error.mock.calls[0][0]).toMatch(/spec error: cannot read/);

    const bad = join(work, "bad.json");
    writeFileSync(bad, JSON.stringify({ kind: "pie", input: "x" }));
    expect(main(["render", bad])).toBe(2);

    const empty = join(work, "empty-columns.json");
    writeFileSync(
      empty,
      JSON.stringify({ kind: "trace_panel", input: "x", columns: [] }),
    );
    expect(main(["render", empty])).toBe(2);
  });

  it("exits 1 on artifact problems", () => {
    const { error } = quiet();
    const spec = join(work, "no-artifact.json");
    writeFileSync(
      spec,
      JSON.stringify({ kind: "trace_panel", input: "gone", columns: ["n_1"] }),
    );
    expect(main(["render", spec])).toBe(1);
    expect(error.mock.calls[0][0]).toMatch(/error: .*manifest\.json/);
  });
});

describe("argument handling", () => {
  it("rejects unknown commands and empty invocations", () => {
    quiet();
    expect(main(["plot"])).toBe(2);
    expect(main([])).toBe(2);
  });

  it("rejects unknown flags and missing positionals", () => {
    quiet();
    expect(main(["render", "--bogus", "x.json"])).toBe(2);
    expect(main(["render"])).toBe(2);
  });

  it("prints usage on --help", () => {
    const { log } = quiet();
    expect(main(["--help"])).toBe(0);
    expect(log.mock.calls[0][0]).toMatch(/usage/);
  });
});
