/** Pure render-model builders.
 *
 * The UI computes no physics and no ML: every number in these models is
 * copied from a server response field, which makes the view testable as a
 * data structure against recorded payloads.
 */

import type { PredictResponse, ProcessMapResponse } from "./api.js";
import type { ExplorerState, SliderValues } from "./state.js";

/** Fixed class order and colorblind-safe palette (Okabe-Ito). */
export const CLASS_ORDER = ["desirable", "keyhole", "lack_of_fusion", "balling"] as const;

export const CLASS_COLORS: Record<string, string> = {
  desirable: "#009E73",
  keyhole: "#D55E00",
  lack_of_fusion: "#0072B2",
  balling: "#E69F00",
};

export const CLASS_LABELS: Record<string, string> = {
  desirable: "desirable",
  keyhole: "keyhole",
  lack_of_fusion: "lack of fusion",
  balling: "balling",
};

export interface GeometryRow {
  label: string;
  valueUm: number;
  rosenthalUm: number | null;
}

export interface ProbBar {
  className: string;
  label: string;
  share: number;
  color: string;
}

export interface PredictionPanelModel {
  geometry: GeometryRow[];
  probBars: ProbBar[] | null;
  topClass: string | null;
  rosenthalOnly: { label: string; valueUm: number }[];
  error: string | null;
}

const GEOMETRY_KEYS: Array<[keyof PredictResponse, string, keyof NonNullable<PredictResponse["rosenthal"]>]> = [
  ["depth_um", "depth", "depth_um"],
  ["width_um", "width", "width_um"],
  ["length_um", "length", "length_um"],
];

export function predictionPanel(
  prediction: PredictResponse | null,
  error: string | null,
): PredictionPanelModel {
  const model: PredictionPanelModel = {
    geometry: [],
    probBars: null,
    topClass: null,
    rosenthalOnly: [],
    error,
  };
  if (!prediction) return model;
  const rosenthal = prediction.rosenthal;
  for (const [key, label, rosKey] of GEOMETRY_KEYS) {
    const value = prediction[key];
    if (typeof value === "number") {
      model.geometry.push({
        label,
        valueUm: value,
        rosenthalUm: rosenthal ? rosenthal[rosKey] : null,
      });
    } else if (rosenthal) {
      model.rosenthalOnly.push({ label, valueUm: rosenthal[rosKey] });
    }
  }
  if (prediction.class_probs) {
    model.probBars = CLASS_ORDER.filter((c) => c in prediction.class_probs!).map((c) => ({
      className: c,
      label: CLASS_LABELS[c],
      share: prediction.class_probs![c],
      color: CLASS_COLORS[c],
    }));
    model.topClass = model.probBars.reduce((a, b) => (b.share > a.share ? b : a)).className;
  }
  return model;
}

export interface HeatmapCell {
  classId: number;
  className: string;
  color: string;
}

export interface HeatmapModel {
  /** cells[i][j] mirrors grid[i][j]: power index i, velocity index j. */
  cells: HeatmapCell[][];
  pAxis: number[];
  vAxis: number[];
  /** cell indices nearest the current slider point */
  marker: { i: number; j: number };
  legend: { className: string; label: string; color: string }[];
}

function nearestIndex(axis: number[], value: number): number {
  let best = 0;
  for (let k = 1; k < axis.length; k++) {
    if (Math.abs(axis[k] - value) < Math.abs(axis[best] - value)) best = k;
  }
  return best;
}

/** Map the server payload onto colored cells; no client-side reclassification. */
export function heatmapModel(pm: ProcessMapResponse, sliders: SliderValues): HeatmapModel {
  const cells = pm.grid.map((row) =>
    row.map((classId) => {
      const className = pm.classes[classId];
      return { classId, className, color: CLASS_COLORS[className] ?? "#999999" };
    }),
  );
  return {
    cells,
    pAxis: pm.p_axis,
    vAxis: pm.v_axis,
    marker: {
      i: nearestIndex(pm.p_axis, sliders.power_w),
      j: nearestIndex(pm.v_axis, sliders.velocity_m_s),
    },
    legend: CLASS_ORDER.map((c) => ({ className: c, label: CLASS_LABELS[c], color: CLASS_COLORS[c] })),
  };
}

export function predictionPanelFromState(state: ExplorerState): PredictionPanelModel {
  return predictionPanel(state.prediction, state.predictionError);
}
