// Learning-curve geometry: pure functions from curve data to SVG paths and
// threshold lines, exercised directly by the tests.

import type { CurvePoint, StopRule } from "./types.js";

export interface ChartLayout {
  width: number;
  height: number;
  marginLeft: number;
  marginRight: number;
  marginTop: number;
  marginBottom: number;
}

export const DEFAULT_LAYOUT: ChartLayout = {
  width: 560,
  height: 280,
  marginLeft: 44,
  marginRight: 12,
  marginTop: 12,
  marginBottom: 28,
};

export interface ThresholdLine {
  metric: "precision" | "recall";
  value: number;
  y: number;
  x1: number;
  x2: number;
}

const innerWidth = (l: ChartLayout) => l.width - l.marginLeft - l.marginRight;
const innerHeight = (l: ChartLayout) => l.height - l.marginTop - l.marginBottom;

/** x position for a labels_used value on a [0, max] axis. */
export function xScale(labelsUsed: number, maxLabels: number, layout: ChartLayout): number {
  const span = Math.max(maxLabels, 1);
  return layout.marginLeft + (labelsUsed / span) * innerWidth(layout);
}

/** y position for a metric value on the fixed [0, 1] axis. */
export function yScale(value: number, layout: ChartLayout): number {
  return layout.marginTop + (1 - value) * innerHeight(layout);
}

export function inverseYScale(y: number, layout: ChartLayout): number {
  return 1 - (y - layout.marginTop) / innerHeight(layout);
}

function pathFor(
  points: CurvePoint[],
  metric: "precision" | "recall",
  maxLabels: number,
  layout: ChartLayout,
): string {
  return points
    .map((pt, i) => {
      const x = xScale(pt.labels_used, maxLabels, layout);
      const y = yScale(pt[metric], layout);
      return `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

export interface CurveGeometry {
  precisionPath: string;
  recallPath: string;
  thresholds: ThresholdLine[];
  maxLabels: number;
}

/** Build every drawable element of the chart. Threshold lines come straight
 * from the session's configured stop rule. */
export function curveGeometry(
  points: CurvePoint[],
  stopRule: StopRule | null,
  layout: ChartLayout = DEFAULT_LAYOUT,
): CurveGeometry {
  const maxLabels = points.length
    ? Math.max(...points.map((p) => p.labels_used))
    : 1;
  const thresholds: ThresholdLine[] = [];
  if (stopRule) {
    for (const [metric, value] of [
      ["precision", stopRule.precision_min],
      ["recall", stopRule.recall_min],
    ] as const) {
      thresholds.push({
        metric,
        value,
        y: yScale(value, layout),
        x1: layout.marginLeft,
        x2: layout.width - layout.marginRight,
      });
    }
  }
  return {
    precisionPath: pathFor(points, "precision", maxLabels, layout),
    recallPath: pathFor(points, "recall", maxLabels, layout),
    thresholds,
    maxLabels,
  };
}
