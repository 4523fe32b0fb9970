/* Perceptually ordered dark-to-bright ramp for probability heatmaps.
 * Nine fixed anchors, linear interpolation in RGB; output is lower-case
 * hex so rendered bytes are stable. */

const ANCHORS = [
  [0x44, 0x01, 0x54],
  [0x47, 0x2d, 0x7b],
  [0x3b, 0x52, 0x8b],
  [0x2c, 0x71, 0x8e],
  [0x21, 0x91, 0x8c],
  [0x27, 0xad, 0x81],
  [0x5e, 0xc9, 0x62],
  [0xaa, 0xdc, 0x32],
  [0xfd, 0xe7, 0x25],
] as const;

function hex2(v: number): string {
  return v.toString(16).padStart(2, "0");
}

/** Map u in [0, 1] (clamped) to a hex color along the ramp. */
export function ramp(u: number): string {
  const x = Math.min(1, Math.max(0, u)) * (ANCHORS.length - 1);
  const i = Math.min(ANCHORS.length - 2, Math.floor(x));
  const f = x - i;
  const a = ANCHORS[i];
  const b = ANCHORS[i + 1];
  const r = Math.round(a[0] + f * (b[0] - a[0]));
  const g = Math.round(a[1] + f * (b[1] - a[1]));
  const bl = Math.round(a[2] + f * (b[2] - a[2]));
  return `#${hex2(r)}${hex2(g)}${hex2(bl)}`;
}
