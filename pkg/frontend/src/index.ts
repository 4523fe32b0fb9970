export { FigureError, SpecError } from "./errors.js";
export { column, parseTable, readTable, resolveColumn, type Table } from "./csv.js";
export { pairCorrelationGrowth } from "./law.js";
export { ramp } from "./color.js";
export { el, esc, fmt, fmtValue, linearScale, niceTicks } from "./svg.js";
export {
  figureSchema,
  loadSpec,
  parseSpec,
  type DensityHeatmapSpec,
  type DistributionHeatmapSpec,
  type FigureSpec,
  type Overlay,
  type TracePanelSpec,
  type VarianceCurveSpec,
} from "./spec.js";
export {
  distributionMatrix,
  meanLevel,
  renderFigure,
  varianceCurvePoints,
  type Distribution,
  type RenderContext,
  type SweepPoint,
} from "./figures.js";
export { main } from "./cli.js";
