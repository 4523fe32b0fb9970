/** Any user-facing failure: a bad figure spec, an unreadable artifact, a
 * missing column. The CLI turns these into exit code 1; everything else is
 * a bug and propagates. */
export class FigureError extends Error {}

/** Figure-spec validation failure (unreadable spec file, malformed JSON,
 * schema violation). The CLI maps these to exit code 2, mirroring the
 * simulator's config-error convention; artifact and data problems stay
 * plain FigureError, exit code 1. */
export class SpecError extends FigureError {}
