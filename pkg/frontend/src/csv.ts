import { readFileSync } from "node:fs";
import { FigureError } from "./errors.js";

/**
 * Numeric table read from a simulation artifact. Trajectory files carry
 * `time,traj_id,<observables...>` and aggregate files carry
 * `time,mean_<obs>,sem_<obs>,...`; both fit the same shape since every
 * cell is a finite float.
 */
export interface Table {
  /** Column names in file order. */
  columns: string[];
  /** Number of data rows. */
  length: number;
  /** Column vectors keyed by exact header name. */
  data: Map<string, Float64Array>;
}

/** Actual key for `name`, allowing the aggregate `mean_` spelling. */
export function resolveColumn(table: Table, name: string): string | undefined {
  if (table.data.has(name)) return name;
  const mean = `mean_${name}`;
  if (table.data.has(mean)) return mean;
  return undefined;
}

export function column(table: Table, name: string): Float64Array {
  const key = resolveColumn(table, name);
  if (key === undefined) {
    throw new FigureError(`no column ${name} (available: ${table.columns.join(", ")})`);
  }
  return table.data.get(key)!;
}

export function parseTable(text: string, origin: string): Table {
  const lines = text.split(/\r?\n/);
  while (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  if (lines.length < 2) {
    throw new FigureError(`${origin}: need a header line and at least one data row`);
  }
  const columns = lines[0].split(",").map((s) => s.trim());
  if (columns.some((c) => c === "")) {
    throw new FigureError(`${origin}: empty column name in header`);
  }
  if (new Set(columns).size !== columns.length) {
    throw new FigureError(`${origin}: duplicate column names in header`);
  }
  const n = lines.length - 1;
  const vectors = columns.map(() => new Float64Array(n));
  for (let i = 0; i < n; i++) {
    const cells = lines[i + 1].split(",");
    if (cells.length !== columns.length) {
      throw new FigureError(
        `${origin}: row ${i + 1} has ${cells.length} cells, expected ${columns.length}`,
      );
    }
    for (let j = 0; j < columns.length; j++) {
      const v = Number(cells[j]);
      if (!Number.isFinite(v)) {
        throw new FigureError(
          `${origin}: row ${i + 1}, column ${columns[j]}: not a finite number: ${cells[j].trim()}`,
        );
      }
      vectors[j][i] = v;
    }
  }
  return {
    columns,
    length: n,
    data: new Map(columns.map((c, j) => [c, vectors[j]])),
  };
}

export function readTable(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new FigureError(`cannot read ${path}: ${(err as Error).message}`);
  }
  return parseTable(text, path);
}
