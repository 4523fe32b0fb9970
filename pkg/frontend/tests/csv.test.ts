import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { column, parseTable, readTable, resolveColumn } from "../src/csv.js";
import { FigureError } from "../src/errors.js";

const FIXTURES = fileURLToPath(new URL("./fixtures/", import.meta.url));

describe("readTable on shipped artifacts", () => {
  it("reads a postselected trajectory table", () => {
    const t = readTable(join(FIXTURES, "correlation", "traj_00000.csv"));
    expect(t.columns).toEqual([
      "time",
      "traj_id",
      "corr_1_4",
      "n_1",
      "n_2",
      "n_3",
      "n_4",
      "log_weight",
    ]);
    expect(t.length).toBe(101);
    expect(column(t, "time")[0]).toBe(0);
    const dens = column(t, "n_2");
    expect(dens[0]).toBeCloseTo(1, 12);
  });

  it("reads an aggregate table and resolves mean_ spellings", () => {
    const t = readTable(join(FIXTURES, "oscillation", "aggregate.csv"));
    expect(t.columns[0]).toBe("time");
    expect(resolveColumn(t, "N_odd")).toBe("mean_N_odd");
    expect(resolveColumn(t, "mean_N_odd")).toBe("mean_N_odd");
    expect(resolveColumn(t, "absent")).toBeUndefined();
    const nOdd = column(t, "N_odd");
    expect(nOdd[0]).toBeCloseTo(3, 9);
  });

  it("fails with the path in the message for a missing file", () => {
    expect(() => readTable(join(FIXTURES, "nope.csv"))).toThrow(/nope\.csv/);
  });
});

describe("parseTable validation", () => {
  it("rejects ragged rows", () => {
    expect(() => parseTable("a,b\n1,2\n3\n", "x")).toThrow(/row 2 has 1 cells/);
  });

  it("rejects non-numeric cells", () => {
    expect(() => parseTable("a,b\n1,oops\n", "x")).toThrow(/not a finite number: oops/);
  });

  it("rejects duplicate and empty header names", () => {
    expect(() => parseTable("a,a\n1,2\n", "x")).toThrow(/duplicate/);
    expect(() => parseTable("a,,b\n1,2,3\n", "x")).toThrow(/empty column name/);
  });

  it("rejects a header with no rows", () => {
    expect(() => parseTable("a,b\n", "x")).toThrow(FigureError);
  });

  it("raises a helpful error for a missing column", () => {
    const t = parseTable("time,n_1\n0,1\n", "x");
    expect(() => column(t, "n_9")).toThrow(/no column n_9/);
  });

  it("accepts CRLF input", () => {
    const t = parseTable("a,b\r\n1,2\r\n", "x");
    expect(t.length).toBe(1);
    expect(column(t, "b")[0]).toBe(2);
  });
});
