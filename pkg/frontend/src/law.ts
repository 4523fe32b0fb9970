import { FigureError } from "./errors.js";

/**
 * Cross-zone number covariance of a strongly monitored two-zone system that
 * starts uncorrelated:
 *
 *     C(t) = [1 - sech^2(4 J^2 t / gamma)] / 4
 *
 * which grows quadratically at short times and saturates at 1/4 once the
 * zones share a fully developed pair correlation. Evaluated via tanh to
 * stay finite for any t.
 */
export function pairCorrelationGrowth(t: number, J: number, gamma: number): number {
  if (!(gamma > 0)) throw new FigureError(`gamma must be positive, got ${gamma}`);
  const x = Math.tanh((4 * J * J * t) / gamma);
  return (x * x) / 4;
}
