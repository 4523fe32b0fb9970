import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { column, readTable } from "../src/csv.js";
import {
  distributionMatrix,
  meanLevel,
  renderFigure,
  varianceCurvePoints,
} from "../src/figures.js";
import { pairCorrelationGrowth } from "../src/law.js";
import { parseSpec } from "../src/spec.js";

const FIXTURES = fileURLToPath(new URL("./fixtures/", import.meta.url));

/** Direction reversals of a series, ignoring moves smaller than deadband. */
function reversals(series: Float64Array, deadband: number): number {
  let count = 0;
  let direction = 0;
  let last = series[0];
  for (let i = 1; i < series.length; i++) {
    const d = series[i] - last;
    if (Math.abs(d) < deadband) continue;
    const s = d > 0 ? 1 : -1;
    if (direction !== 0 && s !== direction) count++;
    direction = s;
    last = series[i];
  }
  return count;
}

describe("distribution matrix from the oscillation artifact", () => {
  const table = readTable(join(FIXTURES, "oscillation", "aggregate.csv"));
  const dist = distributionMatrix(table, "P_odd_");

  it("finds all occupation rows in order", () => {
    expect(dist.levels).toEqual([0, 1, 2, 3, 4, 5, 6]);
    expect(dist.time.length).toBe(261);
  });

  it("is normalized at every time", () => {
    for (let i = 0; i < dist.time.length; i++) {
      let sum = 0;
      for (const row of dist.rows) sum += row[i];
      expect(Math.abs(sum - 1)).toBeLessThan(1e-6);
    }
  });

  it("has a ridge that oscillates and keeps growing", () => {
    const mu = meanLevel(dist);
    expect(mu[0]).toBeCloseTo(3, 6);
    // large swings in both directions, far above noise
    expect(reversals(mu, 0.5)).toBeGreaterThanOrEqual(40);
    const third = Math.floor(mu.length / 3);
    const swing = (seg: Float64Array) => {
      let lo = Infinity;
      let hi = -Infinity;
      for (const v of seg) {
        if (v < lo) lo = v;
        if (v > hi) hi = v;
      }
      return hi - lo;
    };
    const early = swing(mu.subarray(0, third));
    const late = swing(mu.subarray(2 * third));
    expect(late).toBeGreaterThan(2);
    expect(late).toBeGreaterThan(early);
  });

  it("reads the same levels from a single-trajectory file", () => {
    const traj = readTable(join(FIXTURES, "oscillation", "traj_00000.csv"));
    const d = distributionMatrix(traj, "P_odd_");
    expect(d.levels).toEqual(dist.levels);
  });
});

describe("correlation artifact against the analytic law", () => {
  it("tracks [1 - sech^2(4J^2 t/gamma)]/4 within 0.03", () => {
    const table = readTable(join(FIXTURES, "correlation", "traj_00000.csv"));
    const t = column(table, "time");
    const c = column(table, "corr_1_4");
    let worst = 0;
    for (let i = 0; i < t.length; i++) {
      const dev = Math.abs(c[i] - pairCorrelationGrowth(t[i], 1, 100));
      if (dev > worst) worst = dev;
    }
    expect(worst).toBeLessThan(0.03);
    expect(c[t.length - 1]).toBeGreaterThan(0.2);
  });
});

describe("variance curve points from the sweep artifacts", () => {
  const points = varianceCurvePoints(join(FIXTURES, "sweep"), "var_d");

  it("derives one sorted point per run from the stored configs", () => {
    expect(points.map((p) => p.x)).toEqual([0, 0.5, 1, 2, 4, 8, 16]);
    expect(points.map((p) => p.name)).toEqual([
      "u_0.0",
      "u_0.5",
      "u_1.0",
      "u_2.0",
      "u_4.0",
      "u_8.0",
      "u_16.0",
    ]);
  });

  it("is non-monotonic with an interior peak and real error bars", () => {
    const ys = points.map((p) => p.y);
    const peak = ys.indexOf(Math.max(...ys));
    expect(peak).toBeGreaterThan(0);
    expect(peak).toBeLessThan(ys.length - 1);
    expect(Math.max(...ys) - Math.max(ys[0], ys[ys.length - 1])).toBeGreaterThan(0.03);
    for (const p of points) {
      expect(p.err).toBeGreaterThan(0);
      expect(p.err).toBeLessThan(0.05);
    }
  });
});

describe("renderFigure error paths", () => {
  it("rejects a directory that is not an artifact", () => {
    const spec = parseSpec({
      kind: "trace_panel",
      input: "not-there",
      columns: ["n_1"],
    });
    expect(() => renderFigure(spec, { baseDir: FIXTURES })).toThrow(/manifest\.json/);
  });

  it("reports a missing column with the available ones", () => {
    const spec = parseSpec({
      kind: "trace_panel",
      input: "correlation",
      source: { trajectory: 0 },
      columns: ["nope"],
    });
    expect(() => renderFigure(spec, { baseDir: FIXTURES })).toThrow(/no column nope/);
  });

  it("reports a prefix that matches nothing", () => {
    const spec = parseSpec({
      kind: "distribution_heatmap",
      input: "correlation",
      prefix: "P_left_",
    });
    expect(() => renderFigure(spec, { baseDir: FIXTURES })).toThrow(/P_left_/);
  });

  it("reports a missing trajectory file", () => {
    const spec = parseSpec({
      kind: "trace_panel",
      input: "correlation",
      source: { trajectory: 7 },
      columns: ["corr_1_4"],
    });
    expect(() => renderFigure(spec, { baseDir: FIXTURES })).toThrow(/traj_00007/);
  });

  it("reports an empty crop window", () => {
    const spec = parseSpec({
      kind: "trace_panel",
      input: "correlation",
      source: { trajectory: 0 },
      columns: ["corr_1_4"],
      xlim: [900, 1000],
    });
    expect(() => renderFigure(spec, { baseDir: FIXTURES })).toThrow(/xlim/);
  });

  it("reports a sweep directory with no artifacts", () => {
    expect(() => varianceCurvePoints(join(FIXTURES, "correlation"), "var_d")).toThrow(
      /no artifact directories/,
    );
  });
});
