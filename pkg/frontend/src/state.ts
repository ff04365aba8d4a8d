/** Explorer state: selections, clamped slider values, last responses. */

import type { PredictResponse, ProcessMapResponse } from "./api.js";

export interface SliderValues {
  power_w: number;
  velocity_m_s: number;
  beam_diameter_um: number;
  layer_thickness_um: number;
  hatch_spacing_um: number;
}

export type SliderKey = keyof SliderValues;

export type SliderRanges = Record<SliderKey, [number, number]>;

/** Ranges reflect the powder-bed heavy distribution of the dataset. */
export const DEFAULT_RANGES: SliderRanges = {
  power_w: [20, 500],
  velocity_m_s: [0.05, 2.5],
  beam_diameter_um: [20, 200],
  layer_thickness_um: [10, 100],
  hatch_spacing_um: [20, 200],
};

export const DEFAULT_SLIDERS: SliderValues = {
  power_w: 200,
  velocity_m_s: 0.8,
  beam_diameter_um: 80,
  layer_thickness_um: 30,
  hatch_spacing_um: 100,
};

export interface ExplorerState {
  material: string;
  model: string;
  process: string;
  sliders: SliderValues;
  ranges: SliderRanges;
  prediction: PredictResponse | null;
  predictionError: string | null;
  processmap: ProcessMapResponse | null;
  processmapError: string | null;
}

export function initialState(): ExplorerState {
  return {
    material: "SS316L",
    model: "",
    process: "LPBF",
    sliders: { ...DEFAULT_SLIDERS },
    ranges: { ...DEFAULT_RANGES },
    prediction: null,
    predictionError: null,
    processmap: null,
    processmapError: null,
  };
}

export function clamp(value: number, [lo, hi]: [number, number]): number {
  if (Number.isNaN(value)) return lo;
  return Math.min(hi, Math.max(lo, value));
}

export function setSlider(state: ExplorerState, key: SliderKey, raw: number): ExplorerState {
  const value = clamp(raw, state.ranges[key]);
  return { ...state, sliders: { ...state.sliders, [key]: value } };
}

/** Clicking heatmap cell (i, j) moves the power/velocity sliders onto it. */
export function applyCellClick(state: ExplorerState, i: number, j: number): ExplorerState {
  const pm = state.processmap;
  if (!pm || i < 0 || j < 0 || i >= pm.p_axis.length || j >= pm.v_axis.length) {
    return state;
  }
  const withPower = setSlider(state, "power_w", pm.p_axis[i]);
  return setSlider(withPower, "velocity_m_s", pm.v_axis[j]);
}

/** Errors render inline and never clear the previous result. */
export function applyPrediction(state: ExplorerState, response: PredictResponse): ExplorerState {
  return { ...state, prediction: response, predictionError: null };
}

export function applyPredictionError(state: ExplorerState, message: string): ExplorerState {
  return { ...state, predictionError: message };
}

export function applyProcessmap(state: ExplorerState, response: ProcessMapResponse): ExplorerState {
  return { ...state, processmap: response, processmapError: null };
}

export function applyProcessmapError(state: ExplorerState, message: string): ExplorerState {
  return { ...state, processmapError: message };
}
