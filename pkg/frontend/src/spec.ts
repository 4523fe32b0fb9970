import { readFileSync } from "node:fs";
import { dirname } from "node:path";
import { z } from "zod";
import { SpecError } from "./errors.js";

/** Which artifact file feeds the figure: the trajectory-averaged table or
 * one stored trajectory. */
const sourceSchema = z.union([
  z.literal("aggregate"),
  z.object({ trajectory: z.number().int().nonnegative() }).strict(),
]);

const overlaySchema = z
  .object({
    law: z.literal("pair_correlation_growth"),
    J: z.number().finite(),
    gamma: z.number().finite().positive(),
  })
  .strict();

const rangeSchema = z
  .tuple([z.number().finite(), z.number().finite()])
  .refine(([lo, hi]) => lo < hi, { message: "range must be [lo, hi] with lo < hi" });

/** Keys shared by every figure kind. `input` is resolved relative to the
 * spec file; `output` (optional, also spec-relative) can be overridden on
 * the command line. */
const frame = {
  input: z.string().min(1),
  title: z.string().max(200).optional(),
  xlabel: z.string().max(120).optional(),
  ylabel: z.string().max(120).optional(),
  xlim: rangeSchema.optional(),
  ylim: rangeSchema.optional(),
  output: z.string().min(1).optional(),
  width: z.number().int().min(160).max(4096).optional(),
  height: z.number().int().min(120).max(4096).optional(),
};

const withSource = { ...frame, source: sourceSchema.default("aggregate") };

const densityHeatmapSchema = z
  .object({
    kind: z.literal("density_heatmap"),
    /** Site-density columns; `n_` matches the simulator's density token. */
    prefix: z.string().min(1).default("n_"),
    ...withSource,
  })
  .strict();

const distributionHeatmapSchema = z
  .object({
    kind: z.literal("distribution_heatmap"),
    /** Column-name prefix; `<prefix><k>` columns become heatmap rows. */
    prefix: z.string().min(1),
    ...withSource,
  })
  .strict();

const tracePanelSchema = z
  .object({
    kind: z.literal("trace_panel"),
    columns: z.array(z.string().min(1)).min(1, "at least one column is required"),
    overlay: overlaySchema.optional(),
    ...withSource,
  })
  .strict();

/** One point per artifact directory found under `input`: x = U/J from the
 * run's config, y = late-window average of the aggregate column, with the
 * standard error as the bar. */
const varianceCurveSchema = z
  .object({
    kind: z.literal("variance_curve"),
    column: z.string().min(1),
    ...frame,
  })
  .strict();

export const figureSchema = z.discriminatedUnion("kind", [
  densityHeatmapSchema,
  distributionHeatmapSchema,
  tracePanelSchema,
  varianceCurveSchema,
]);

export type FigureSpec = z.infer<typeof figureSchema>;
export type DensityHeatmapSpec = z.infer<typeof densityHeatmapSchema>;
export type DistributionHeatmapSpec = z.infer<typeof distributionHeatmapSchema>;
export type TracePanelSpec = z.infer<typeof tracePanelSchema>;
export type VarianceCurveSpec = z.infer<typeof varianceCurveSchema>;
export type Overlay = z.infer<typeof overlaySchema>;

export function parseSpec(value: unknown): FigureSpec {
  const out = figureSchema.safeParse(value);
  if (!out.success) {
    const issues = out.error.issues
      .map((i) => `${i.path.join(".") || "(root)"}: ${i.message}`)
      .join("; ");
    throw new SpecError(`invalid figure spec: ${issues}`);
  }
  return out.data;
}

/** Read and validate a spec file. `baseDir` is the directory the input
 * and output paths should be resolved against (the spec file's own
 * directory). */
export function loadSpec(path: string): { spec: FigureSpec; baseDir: string } {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new SpecError(`cannot read ${path}: ${(err as Error).message}`);
  }
  let value: unknown;
  try {
    value = JSON.parse(text);
  } catch (err) {
    throw new SpecError(`${path}: ${(err as Error).message}`);
  }
  return { spec: parseSpec(value), baseDir: dirname(path) };
}
