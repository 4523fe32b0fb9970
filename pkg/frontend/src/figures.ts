import { readdirSync, readFileSync } from "node:fs";
import { join, resolve } from "node:path";
import { column, readTable, resolveColumn, type Table } from "./csv.js";
import { ramp } from "./color.js";
import { FigureError } from "./errors.js";
import { pairCorrelationGrowth } from "./law.js";
import type {
  DensityHeatmapSpec,
  DistributionHeatmapSpec,
  FigureSpec,
  TracePanelSpec,
  VarianceCurveSpec,
} from "./spec.js";
import { el, esc, fmt, fmtValue, linearScale, niceTicks } from "./svg.js";

export interface RenderContext {
  /** Directory the spec's input path is resolved against. Defaults to the
   * working directory. */
  baseDir?: string;
}

const SERIES_COLORS = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b"];
const OVERLAY_COLOR = "#d62728";
const ARTIFACT_SCHEMA_VERSION = 1;

/** Occupation-number distribution over time, one row per occupation. */
export interface Distribution {
  time: Float64Array;
  /** Ascending occupation values, one per row. */
  levels: number[];
  /** rows[r][i] = P(levels[r]) at time[i]. */
  rows: Float64Array[];
}

/** One sweep point for a variance curve. */
export interface SweepPoint {
  /** Subdirectory the point came from. */
  name: string;
  /** Interaction-to-tunneling ratio from the run's config. */
  x: number;
  /** Late-window average of the aggregate column. */
  y: number;
  /** Late-window average of the column's standard error. */
  err: number;
}

function readJson(path: string, kind: string): Record<string, unknown> {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new FigureError(`cannot read ${kind} ${path}: ${(err as Error).message}`);
  }
  let value: unknown;
  try {
    value = JSON.parse(text);
  } catch (err) {
    throw new FigureError(`${path}: ${(err as Error).message}`);
  }
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new FigureError(`${path}: expected a JSON object`);
  }
  return value as Record<string, unknown>;
}

/** Reject directories that are not simulation artifacts or were written
 * by a different schema revision. */
function checkArtifact(dir: string): void {
  const manifest = readJson(join(dir, "manifest.json"), "artifact manifest");
  const version = manifest.schema_version;
  if (version !== ARTIFACT_SCHEMA_VERSION) {
    throw new FigureError(
      `${dir}: artifact schema_version ${String(version)} not supported, ` +
        `expected ${ARTIFACT_SCHEMA_VERSION}`,
    );
  }
}

/**
 * Collect `<prefix><k>` columns (or their aggregate `mean_` spellings)
 * into a distribution matrix, rows sorted by k.
 */
export function distributionMatrix(table: Table, prefix: string): Distribution {
  const hits: Array<{ level: number; key: string }> = [];
  for (const name of table.columns) {
    const bare = name.startsWith("mean_") ? name.slice(5) : name;
    if (!bare.startsWith(prefix)) continue;
    if (name.startsWith("sem_")) continue;
    const tail = bare.slice(prefix.length);
    if (!/^\d+$/.test(tail)) continue;
    hits.push({ level: Number(tail), key: name });
  }
  if (hits.length === 0) {
    throw new FigureError(
      `no columns matching ${prefix}<k> (available: ${table.columns.join(", ")})`,
    );
  }
  hits.sort((a, b) => a.level - b.level);
  return {
    time: column(table, "time"),
    levels: hits.map((h) => h.level),
    rows: hits.map((h) => table.data.get(h.key)!),
  };
}

/** Mean occupation at each time, the ridge line of the distribution. */
export function meanLevel(dist: Distribution): Float64Array {
  const n = dist.time.length;
  const mu = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    let norm = 0;
    let acc = 0;
    for (let r = 0; r < dist.levels.length; r++) {
      const p = dist.rows[r][i];
      norm += p;
      acc += dist.levels[r] * p;
    }
    if (norm <= 0) throw new FigureError(`distribution sums to ${norm} at row ${i}`);
    mu[i] = acc / norm;
  }
  return mu;
}

/**
 * One curve point per artifact directory found directly under `dir`.
 * x comes from the stored config (U/J), y and its error bar from the
 * last third of the aggregate rows. Sorted by x, then by name.
 */
export function varianceCurvePoints(dir: string, columnName: string): SweepPoint[] {
  let entries;
  try {
    entries = readdirSync(dir, { withFileTypes: true });
  } catch (err) {
    throw new FigureError(`cannot read sweep directory ${dir}: ${(err as Error).message}`);
  }
  const points: SweepPoint[] = [];
  const bare = columnName.startsWith("mean_") ? columnName.slice(5) : columnName;
  for (const entry of entries.filter((e) => e.isDirectory()).sort((a, b) => a.name < b.name ? -1 : 1)) {
    const sub = join(dir, entry.name);
    checkArtifact(sub);
    const config = readJson(join(sub, "config.json"), "run config");
    const model = config.model;
    if (typeof model !== "object" || model === null) {
      throw new FigureError(`${sub}/config.json: missing model section`);
    }
    const { U, J } = model as { U?: unknown; J?: unknown };
    if (typeof U !== "number" || typeof J !== "number" || J === 0) {
      throw new FigureError(`${sub}/config.json: model.U and nonzero model.J required`);
    }
    const table = readTable(join(sub, "aggregate.csv"));
    const values = column(table, bare);
    const sem = table.data.get(`sem_${bare}`);
    if (sem === undefined) {
      throw new FigureError(
        `${sub}/aggregate.csv: no column sem_${bare} for the error bars`,
      );
    }
    const start = Math.min(table.length - 1, Math.floor((2 * table.length) / 3));
    let y = 0;
    let err = 0;
    for (let i = start; i < table.length; i++) {
      y += values[i];
      err += sem[i];
    }
    const window = table.length - start;
    points.push({ name: entry.name, x: U / J, y: y / window, err: err / window });
  }
  if (points.length === 0) {
    throw new FigureError(`no artifact directories under ${dir}`);
  }
  points.sort((a, b) => a.x - b.x || (a.name < b.name ? -1 : 1));
  return points;
}

function artifactTable(
  spec: DensityHeatmapSpec | DistributionHeatmapSpec | TracePanelSpec,
  baseDir: string,
): Table {
  const dir = resolve(baseDir, spec.input);
  checkArtifact(dir);
  const file =
    spec.source === "aggregate"
      ? "aggregate.csv"
      : `traj_${String(spec.source.trajectory).padStart(5, "0")}.csv`;
  return readTable(join(dir, file));
}

/** Indices of samples kept by an optional x-range crop. */
function timeWindow(t: Float64Array, xlim?: [number, number]): number[] {
  const idx: number[] = [];
  for (let i = 0; i < t.length; i++) {
    if (xlim !== undefined && (t[i] < xlim[0] - 1e-9 || t[i] > xlim[1] + 1e-9)) continue;
    idx.push(i);
  }
  if (idx.length === 0) {
    throw new FigureError(`no samples inside xlim [${xlim![0]}, ${xlim![1]}]`);
  }
  return idx;
}

interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

function frameFor(
  spec: FigureSpec,
  defaults: { width: number; height: number; right: number },
): Frame {
  return {
    width: spec.width ?? defaults.width,
    height: spec.height ?? defaults.height,
    left: 52,
    right: defaults.right,
    top: spec.title === undefined ? 18 : 40,
    bottom: 44,
  };
}

function xAxis(
  f: Frame,
  X: (v: number) => number,
  lo: number,
  hi: number,
  label: string,
): string {
  const y0 = f.height - f.bottom;
  const parts = [
    el("line", { x1: f.left, y1: y0, x2: f.width - f.right, y2: y0, stroke: "#333" }),
  ];
  for (const t of niceTicks(lo, hi, 7)) {
    if (t < lo - 1e-9 || t > hi + 1e-9) continue;
    const x = X(t);
    parts.push(el("line", { x1: x, y1: y0, x2: x, y2: y0 + 4, stroke: "#333" }));
    parts.push(
      el(
        "text",
        { x, y: y0 + 16, "text-anchor": "middle", fill: "#333" },
        esc(fmtValue(t)),
      ),
    );
  }
  parts.push(
    el(
      "text",
      {
        x: (f.left + f.width - f.right) / 2,
        y: f.height - 8,
        "text-anchor": "middle",
        fill: "#333",
      },
      esc(label),
    ),
  );
  return parts.join("");
}

function yAxis(
  f: Frame,
  Y: (v: number) => number,
  ticks: number[],
  label: string,
): string {
  const parts = [
    el("line", {
      x1: f.left,
      y1: f.top,
      x2: f.left,
      y2: f.height - f.bottom,
      stroke: "#333",
    }),
  ];
  for (const t of ticks) {
    const y = Y(t);
    parts.push(el("line", { x1: f.left - 4, y1: y, x2: f.left, y2: y, stroke: "#333" }));
    parts.push(
      el(
        "text",
        { x: f.left - 7, y: y + 3.5, "text-anchor": "end", fill: "#333" },
        esc(fmtValue(t)),
      ),
    );
  }
  const cx = 14;
  const cy = (f.top + f.height - f.bottom) / 2;
  parts.push(
    el(
      "text",
      {
        x: cx,
        y: cy,
        "text-anchor": "middle",
        fill: "#333",
        transform: `rotate(-90 ${fmt(cx)} ${fmt(cy)})`,
      },
      esc(label),
    ),
  );
  return parts.join("");
}

function titleBlock(f: Frame, title: string | undefined): string {
  if (title === undefined) return "";
  return el(
    "text",
    {
      x: (f.left + f.width - f.right) / 2,
      y: 22,
      "text-anchor": "middle",
      "font-size": 13,
      fill: "#111",
    },
    esc(title),
  );
}

/** Clip region covering the plot area, for lines that may leave it when
 * an explicit axis range crops the data. */
function plotClip(f: Frame): string {
  return el(
    "clipPath",
    { id: "plot" },
    el("rect", {
      x: f.left,
      y: f.top,
      width: f.width - f.right - f.left,
      height: f.height - f.bottom - f.top,
    }),
  );
}

function envelope(f: Frame, body: string): string {
  const head =
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fmt(f.width)}" ` +
    `height="${fmt(f.height)}" viewBox="0 0 ${fmt(f.width)} ${fmt(f.height)}" ` +
    `font-family="Helvetica, Arial, sans-serif" font-size="11">`;
  const bg = el("rect", { x: 0, y: 0, width: f.width, height: f.height, fill: "#ffffff" });
  return `${head}${bg}${body}</svg>\n`;
}

function legendRow(
  f: Frame,
  slot: number,
  stroke: string,
  dashed: boolean,
  label: string,
): string {
  const y = f.top + 12 + 14 * slot;
  const line: Record<string, string | number> = {
    x1: f.left + 10,
    y1: y,
    x2: f.left + 34,
    y2: y,
    stroke,
    "stroke-width": 1.6,
  };
  if (dashed) line["stroke-dasharray"] = "6 4";
  return (
    el("line", line) +
    el(
      "text",
      { x: f.left + 40, y: y + 3.5, "text-anchor": "start", fill: "#333" },
      esc(label),
    )
  );
}

function renderHeatmap(
  spec: DensityHeatmapSpec | DistributionHeatmapSpec,
  table: Table,
  opts: { ridge: boolean; barLabel: string; yLabel: string },
): string {
  const dist = distributionMatrix(table, spec.prefix);
  const keep = timeWindow(dist.time, spec.xlim);
  const t = dist.time;
  const n = t.length;
  const dt = n > 1 ? (t[n - 1] - t[0]) / (n - 1) : 1;

  let levelIdx = dist.levels.map((_, r) => r);
  if (spec.ylim !== undefined) {
    const [lo, hi] = spec.ylim;
    levelIdx = levelIdx.filter(
      (r) => dist.levels[r] >= lo - 1e-9 && dist.levels[r] <= hi + 1e-9,
    );
    if (levelIdx.length === 0) {
      throw new FigureError(`no ${spec.prefix}<k> rows inside ylim [${lo}, ${hi}]`);
    }
  }

  let vmax = 0;
  for (const r of levelIdx) {
    const row = dist.rows[r];
    for (const i of keep) if (row[i] > vmax) vmax = row[i];
  }
  if (vmax <= 0) vmax = 1;

  const f = frameFor(spec, { width: 640, height: 360, right: 86 });
  const tLo = t[keep[0]] - dt / 2;
  const tHi = t[keep[keep.length - 1]] + dt / 2;
  const X = linearScale(tLo, tHi, f.left, f.width - f.right);
  const kLo = dist.levels[levelIdx[0]] - 0.5;
  const kHi = dist.levels[levelIdx[levelIdx.length - 1]] + 0.5;
  const Y = linearScale(kLo, kHi, f.height - f.bottom, f.top);

  const cells: string[] = [];
  for (const r of levelIdx) {
    const k = dist.levels[r];
    const yTop = Y(k + 0.5);
    const h = Y(k - 0.5) - yTop;
    const row = dist.rows[r];
    for (const i of keep) {
      const x0 = X(t[i] - dt / 2);
      const w = X(t[i] + dt / 2) - x0;
      cells.push(
        el("rect", {
          x: x0,
          y: yTop,
          width: w,
          height: h,
          fill: ramp(row[i] / vmax),
        }),
      );
    }
  }

  let ridge = "";
  if (opts.ridge) {
    const mu = meanLevel(dist);
    const pts: string[] = [];
    for (const i of keep) pts.push(`${fmt(X(t[i]))},${fmt(Y(mu[i]))}`);
    ridge =
      plotClip(f) +
      el(
        "g",
        { "clip-path": "url(#plot)" },
        el("polyline", {
          points: pts.join(" "),
          fill: "none",
          stroke: "#ffffff",
          "stroke-width": 1.2,
          "stroke-opacity": 0.85,
        }),
      );
  }

  // vertical colorbar, zero at the bottom
  const barX = f.width - f.right + 30;
  const barW = 12;
  const segments = 48;
  const BarY = linearScale(0, vmax, f.height - f.bottom, f.top);
  const bar: string[] = [];
  for (let s = 0; s < segments; s++) {
    const v0 = (vmax * s) / segments;
    const v1 = (vmax * (s + 1)) / segments;
    const y1 = BarY(v1);
    bar.push(
      el("rect", {
        x: barX,
        y: y1,
        width: barW,
        height: BarY(v0) - y1,
        fill: ramp((s + 0.5) / segments),
      }),
    );
  }
  bar.push(
    el("rect", {
      x: barX,
      y: f.top,
      width: barW,
      height: f.height - f.bottom - f.top,
      fill: "none",
      stroke: "#333",
    }),
  );
  for (const v of [0, vmax / 2, vmax]) {
    const y = BarY(v);
    bar.push(
      el(
        "text",
        { x: barX + barW + 4, y: y + 3.5, "text-anchor": "start", fill: "#333" },
        esc(fmtValue(v)),
      ),
    );
  }
  bar.push(
    el(
      "text",
      { x: barX + barW / 2, y: f.top - 6, "text-anchor": "middle", fill: "#333" },
      esc(opts.barLabel),
    ),
  );

  const kept = levelIdx.map((r) => dist.levels[r]);
  const kTickEvery = Math.max(1, Math.ceil(kept.length / 8));
  const kTicks = kept.filter((_, i) => i % kTickEvery === 0);
  const body =
    el("g", { "shape-rendering": "crispEdges" }, cells.join("")) +
    ridge +
    xAxis(f, X, tLo, tHi, spec.xlabel ?? "time") +
    yAxis(f, Y, kTicks, spec.ylabel ?? opts.yLabel) +
    bar.join("") +
    titleBlock(f, spec.title);
  return envelope(f, body);
}

function renderTracePanel(spec: TracePanelSpec, table: Table): string {
  const t = column(table, "time");
  const series = spec.columns.map((name) => column(table, name));
  const keep = timeWindow(t, spec.xlim);

  let overlayVals: Float64Array | undefined;
  if (spec.overlay !== undefined) {
    overlayVals = new Float64Array(t.length);
    for (const i of keep) {
      overlayVals[i] = pairCorrelationGrowth(t[i], spec.overlay.J, spec.overlay.gamma);
    }
  }

  let lo = Infinity;
  let hi = -Infinity;
  for (const values of overlayVals === undefined ? series : [...series, overlayVals]) {
    for (const i of keep) {
      if (values[i] < lo) lo = values[i];
      if (values[i] > hi) hi = values[i];
    }
  }
  if (lo > 0) lo = 0;
  const pad = 0.06 * (hi - lo || 1);
  hi += pad;
  if (lo < 0) lo -= pad;
  if (spec.ylim !== undefined) [lo, hi] = spec.ylim;

  const f = frameFor(spec, { width: 560, height: 320, right: 20 });
  const tLo = t[keep[0]];
  const tHi = t[keep[keep.length - 1]];
  const X = linearScale(tLo, tHi, f.left, f.width - f.right);
  const Y = linearScale(lo, hi, f.height - f.bottom, f.top);

  const yTicks = niceTicks(lo, hi, 6).filter((v) => v >= lo - 1e-9 && v <= hi + 1e-9);
  const grid = yTicks
    .map((v) =>
      el("line", {
        x1: f.left,
        y1: Y(v),
        x2: f.width - f.right,
        y2: Y(v),
        stroke: "#ddd",
      }),
    )
    .join("");

  const points = (values: Float64Array): string => {
    const pts: string[] = [];
    for (const i of keep) pts.push(`${fmt(X(t[i]))},${fmt(Y(values[i]))}`);
    return pts.join(" ");
  };

  const lines: string[] = [];
  const legends: string[] = [];
  spec.columns.forEach((name, s) => {
    const stroke = SERIES_COLORS[s % SERIES_COLORS.length];
    lines.push(
      el("polyline", {
        points: points(series[s]),
        fill: "none",
        stroke,
        "stroke-width": 1.6,
      }),
    );
    legends.push(legendRow(f, s, stroke, false, name));
  });
  if (overlayVals !== undefined && spec.overlay !== undefined) {
    lines.push(
      el("polyline", {
        points: points(overlayVals),
        fill: "none",
        stroke: OVERLAY_COLOR,
        "stroke-width": 1.4,
        "stroke-dasharray": "6 4",
      }),
    );
    legends.push(
      legendRow(
        f,
        spec.columns.length,
        OVERLAY_COLOR,
        true,
        `sech^2 law (J=${fmtValue(spec.overlay.J)}, gamma=${fmtValue(spec.overlay.gamma)})`,
      ),
    );
  }

  const defaultYLabel = spec.columns.length === 1 ? spec.columns[0] : "value";
  const body =
    grid +
    plotClip(f) +
    el("g", { "clip-path": "url(#plot)" }, lines.join("")) +
    xAxis(f, X, tLo, tHi, spec.xlabel ?? "time") +
    yAxis(f, Y, yTicks, spec.ylabel ?? defaultYLabel) +
    legends.join("") +
    titleBlock(f, spec.title);
  return envelope(f, body);
}

function renderVarianceCurve(spec: VarianceCurveSpec, dir: string): string {
  let pts = varianceCurvePoints(dir, spec.column);
  if (spec.xlim !== undefined) {
    const [xLo, xHi] = spec.xlim;
    pts = pts.filter((p) => p.x >= xLo - 1e-9 && p.x <= xHi + 1e-9);
    if (pts.length === 0) {
      throw new FigureError(`no sweep points inside xlim [${xLo}, ${xHi}]`);
    }
  }

  let xLo = pts[0].x;
  let xHi = pts[pts.length - 1].x;
  const xPad = 0.04 * (xHi - xLo || 1);
  xLo -= xPad;
  xHi += xPad;
  let lo = 0;
  let hi = -Infinity;
  for (const p of pts) {
    if (p.y - p.err < lo) lo = p.y - p.err;
    if (p.y + p.err > hi) hi = p.y + p.err;
  }
  hi += 0.08 * (hi - lo || 1);
  if (spec.ylim !== undefined) [lo, hi] = spec.ylim;

  const f = frameFor(spec, { width: 560, height: 320, right: 20 });
  const X = linearScale(xLo, xHi, f.left, f.width - f.right);
  const Y = linearScale(lo, hi, f.height - f.bottom, f.top);

  const yTicks = niceTicks(lo, hi, 6).filter((v) => v >= lo - 1e-9 && v <= hi + 1e-9);
  const grid = yTicks
    .map((v) =>
      el("line", {
        x1: f.left,
        y1: Y(v),
        x2: f.width - f.right,
        y2: Y(v),
        stroke: "#ddd",
      }),
    )
    .join("");

  const stroke = SERIES_COLORS[0];
  const marks: string[] = [];
  const linePts: string[] = [];
  for (const p of pts) {
    const x = X(p.x);
    linePts.push(`${fmt(x)},${fmt(Y(p.y))}`);
    const yLo = Y(p.y - p.err);
    const yHi = Y(p.y + p.err);
    marks.push(el("line", { x1: x, y1: yLo, x2: x, y2: yHi, stroke: "#333" }));
    marks.push(el("line", { x1: x - 3, y1: yHi, x2: x + 3, y2: yHi, stroke: "#333" }));
    marks.push(el("line", { x1: x - 3, y1: yLo, x2: x + 3, y2: yLo, stroke: "#333" }));
  }
  const connector = el("polyline", {
    points: linePts.join(" "),
    fill: "none",
    stroke,
    "stroke-width": 1.2,
    "stroke-opacity": 0.7,
  });
  for (const p of pts) {
    marks.push(el("circle", { cx: X(p.x), cy: Y(p.y), r: 3, fill: stroke }));
  }

  const body =
    grid +
    plotClip(f) +
    el("g", { "clip-path": "url(#plot)" }, connector + marks.join("")) +
    xAxis(f, X, xLo, xHi, spec.xlabel ?? "U/J") +
    yAxis(f, Y, yTicks, spec.ylabel ?? spec.column) +
    titleBlock(f, spec.title);
  return envelope(f, body);
}

/** Render a validated spec to SVG text. Pure given the artifact files:
 * the same spec and artifacts always produce identical bytes. */
export function renderFigure(spec: FigureSpec, ctx: RenderContext = {}): string {
  const baseDir = ctx.baseDir ?? process.cwd();
  if (spec.kind === "variance_curve") {
    return renderVarianceCurve(spec, resolve(baseDir, spec.input));
  }
  const table = artifactTable(spec, baseDir);
  if (spec.kind === "density_heatmap") {
    return renderHeatmap(spec, table, { ridge: false, barLabel: "n", yLabel: "site" });
  }
  if (spec.kind === "distribution_heatmap") {
    return renderHeatmap(spec, table, {
      ridge: true,
      barLabel: "P",
      yLabel: `${spec.prefix}k`,
    });
  }
  return renderTracePanel(spec, table);
}
