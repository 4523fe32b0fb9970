import { FigureError } from "./errors.js";

/**
 * Coordinate formatter: fixed two decimals with trailing zeros stripped,
 * negative zero normalized. Every coordinate in the output goes through
 * this so a rerun produces identical bytes.
 */
export function fmt(x: number): string {
  if (!Number.isFinite(x)) throw new FigureError(`non-finite coordinate: ${x}`);
  let s = x.toFixed(2);
  if (s.includes(".")) s = s.replace(/0+$/, "").replace(/\.$/, "");
  return s === "-0" ? "0" : s;
}

/** Tick-label formatter: up to six significant digits, exponential form
 * outside [1e-4, 1e6). */
export function fmtValue(x: number): string {
  if (x === 0) return "0";
  const a = Math.abs(x);
  if (a >= 1e6 || a < 1e-4) {
    return x.toExponential(2).replace(/\.?0+e/, "e");
  }
  let s = x.toPrecision(6);
  if (s.includes("e")) return fmtValue(Number(s));
  if (s.includes(".")) s = s.replace(/0+$/, "").replace(/\.$/, "");
  return s === "-0" ? "0" : s;
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export type Attrs = Record<string, string | number>;

/** Build one element; numeric attribute values are coordinate-formatted.
 * With no body the tag self-closes. */
export function el(tag: string, attrs: Attrs, body?: string): string {
  const parts = [`<${tag}`];
  for (const [key, value] of Object.entries(attrs)) {
    const v = typeof value === "number" ? fmt(value) : value;
    parts.push(` ${key}="${v}"`);
  }
  if (body === undefined) {
    parts.push("/>");
  } else {
    parts.push(`>${body}</${tag}>`);
  }
  return parts.join("");
}

/**
 * Tick positions covering [lo, hi] on a 1-2-5 ladder, roughly `count` of
 * them. Degenerate ranges collapse to the single value.
 */
export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const raw = (hi - lo) / Math.max(1, count);
  const mag = 10 ** Math.floor(Math.log10(raw));
  const norm = raw / mag;
  const step = (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10) * mag;
  const ticks: number[] = [];
  const first = Math.ceil(lo / step - 1e-9);
  const last = Math.floor(hi / step + 1e-9);
  for (let k = first; k <= last; k++) {
    const v = k * step;
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Affine map from [d0, d1] to [r0, r1]. */
export function linearScale(
  d0: number,
  d1: number,
  r0: number,
  r1: number,
): (v: number) => number {
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  const k = (r1 - r0) / span;
  return (v: number) => r0 + (v - d0) * k;
}
