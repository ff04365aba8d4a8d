/** DOM wiring for the process-map explorer. */

import { ApiClient, ModelInfo, PredictRequest, ProcessMapRequest } from "./api.js";
import { DEFAULT_LAYOUT, cellAt, drawHeatmap } from "./heatmap.js";
import { heatmapModel, predictionPanelFromState } from "./render.js";
import {
  ExplorerState,
  SliderKey,
  applyCellClick,
  applyPrediction,
  applyPredictionError,
  applyProcessmap,
  applyProcessmapError,
  initialState,
  setSlider,
} from "./state.js";
import { DebouncedRequester } from "./scheduler.js";

const api = new ApiClient("");
let state: ExplorerState = initialState();
let models: ModelInfo[] = [];

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

const SLIDER_DEFS: Array<{ key: SliderKey; label: string; step: number; unit: string }> = [
  { key: "power_w", label: "beam power", step: 1, unit: "W" },
  { key: "velocity_m_s", label: "scan speed", step: 0.01, unit: "m/s" },
  { key: "beam_diameter_um", label: "beam diameter", step: 1, unit: "um" },
  { key: "layer_thickness_um", label: "layer thickness", step: 1, unit: "um" },
  { key: "hatch_spacing_um", label: "hatch spacing", step: 1, unit: "um" },
];

function predictRequest(): PredictRequest {
  return {
    model: state.model,
    process: state.process,
    material: state.material,
    power_w: state.sliders.power_w,
    velocity_m_s: state.sliders.velocity_m_s,
    beam_diameter_um: state.sliders.beam_diameter_um,
    layer_thickness_um: state.sliders.layer_thickness_um,
    hatch_spacing_um: state.sliders.hatch_spacing_um,
  };
}

function classifierModel(): ModelInfo | undefined {
  return models.find((m) => m.target === "defect_class");
}

function processmapRequest(): ProcessMapRequest | null {
  const classifier = classifierModel();
  if (!classifier) return null;
  return {
    model: classifier.name,
    material: state.material,
    p_range: state.ranges.power_w,
    v_range: state.ranges.velocity_m_s,
    resolution: 36,
    fixed: {
      process: state.process,
      beam_diameter_um: state.sliders.beam_diameter_um,
      layer_thickness_um: state.sliders.layer_thickness_um,
      hatch_spacing_um: state.sliders.hatch_spacing_um,
    },
  };
}

const predictor = new DebouncedRequester(
  (req: PredictRequest) => api.predict(req),
  (res) => {
    state = applyPrediction(state, res);
    renderPrediction();
  },
  (message) => {
    state = applyPredictionError(state, message);
    renderPrediction();
  },
);

const mapper = new DebouncedRequester(
  (req: ProcessMapRequest) => api.processmap(req),
  (res) => {
    state = applyProcessmap(state, res);
    renderHeatmap();
  },
  (message) => {
    state = applyProcessmapError(state, message);
    renderHeatmap();
  },
);

function refreshPrediction(): void {
  if (state.model) predictor.request(predictRequest());
}

function refreshProcessmap(): void {
  const req = processmapRequest();
  if (req) mapper.request(req);
}

function renderPrediction(): void {
  const panel = predictionPanelFromState(state);
  const geom = $("geometry");
  geom.innerHTML = "";
  for (const row of panel.geometry) {
    const div = document.createElement("div");
    div.className = "geom-row";
    const ros = row.rosenthalUm !== null ? `${row.rosenthalUm.toFixed(1)} um` : "-";
    div.innerHTML =
      `<span class="geom-label">${row.label}</span>` +
      `<span class="geom-value">${row.valueUm.toFixed(1)} um</span>` +
      `<span class="geom-ros">Rosenthal ${ros}</span>`;
    geom.appendChild(div);
  }
  for (const row of panel.rosenthalOnly) {
    const div = document.createElement("div");
    div.className = "geom-row muted";
    div.innerHTML =
      `<span class="geom-label">${row.label}</span>` +
      `<span class="geom-value">-</span>` +
      `<span class="geom-ros">Rosenthal ${row.valueUm.toFixed(1)} um</span>`;
    geom.appendChild(div);
  }
  const bars = $("prob-bars");
  bars.innerHTML = "";
  if (panel.probBars) {
    for (const bar of panel.probBars) {
      const row = document.createElement("div");
      row.className = "prob-row";
      const width = (100 * bar.share).toFixed(1);
      row.innerHTML =
        `<span class="prob-label">${bar.label}</span>` +
        `<div class="prob-track"><div class="prob-fill" ` +
        `style="width:${width}%;background:${bar.color}"></div></div>` +
        `<span class="prob-value">${width}%</span>`;
      bars.appendChild(row);
    }
  }
  const errBox = $("predict-error");
  errBox.textContent = panel.error ?? "";
  errBox.style.display = panel.error ? "block" : "none";
}

function renderHeatmap(): void {
  const canvas = $("heatmap") as unknown as HTMLCanvasElement;
  const errBox = $("map-error");
  errBox.textContent = state.processmapError ?? "";
  errBox.style.display = state.processmapError ? "block" : "none";
  if (!state.processmap) return;
  const model = heatmapModel(state.processmap, state.sliders);
  const ctx = canvas.getContext("2d");
  if (ctx) drawHeatmap(ctx, model, DEFAULT_LAYOUT);
  const legend = $("legend");
  legend.innerHTML = "";
  for (const item of model.legend) {
    const el = document.createElement("span");
    el.className = "legend-item";
    el.innerHTML = `<span class="swatch" style="background:${item.color}"></span>${item.label}`;
    legend.appendChild(el);
  }
}

function renderSliderLabels(): void {
  for (const def of SLIDER_DEFS) {
    const value = state.sliders[def.key];
    $(`${def.key}-value`).textContent =
      `${def.step < 1 ? value.toFixed(2) : Math.round(value)} ${def.unit}`;
    ($(`${def.key}`) as unknown as HTMLInputElement).value = String(value);
  }
}

function onSliderInput(key: SliderKey, raw: number): void {
  state = setSlider(state, key, raw);
  renderSliderLabels();
  refreshPrediction();
  if (key !== "power_w" && key !== "velocity_m_s") {
    refreshProcessmap(); // the map is a (P, V) sweep; other knobs reshape it
  } else if (state.processmap) {
    renderHeatmap(); // just move the marker
  }
}

function buildControls(): void {
  const box = $("sliders");
  for (const def of SLIDER_DEFS) {
    const [lo, hi] = state.ranges[def.key];
    const row = document.createElement("div");
    row.className = "slider-row";
    row.innerHTML =
      `<label for="${def.key}">${def.label}</label>` +
      `<input type="range" id="${def.key}" min="${lo}" max="${hi}" step="${def.step}" />` +
      `<span class="slider-value" id="${def.key}-value"></span>`;
    box.appendChild(row);
    row.querySelector("input")!.addEventListener("input", (ev) => {
      onSliderInput(def.key, Number((ev.target as HTMLInputElement).value));
    });
  }
}

async function boot(): Promise<void> {
  buildControls();
  renderSliderLabels();
  const [materials, loadedModels] = await Promise.all([api.materials(), api.models()]);
  models = loadedModels;
  const materialSelect = $("material") as unknown as HTMLSelectElement;
  for (const mat of materials.filter((m) => m.has_thermal)) {
    const opt = document.createElement("option");
    opt.value = mat.name;
    opt.textContent = mat.name;
    materialSelect.appendChild(opt);
  }
  materialSelect.value = state.material;
  materialSelect.addEventListener("change", () => {
    state = { ...state, material: materialSelect.value };
    refreshPrediction();
    refreshProcessmap();
  });

  const modelSelect = $("model") as unknown as HTMLSelectElement;
  for (const m of models) {
    const opt = document.createElement("option");
    opt.value = m.name;
    opt.textContent = `${m.name} (${m.kind}, ${m.target})`;
    modelSelect.appendChild(opt);
  }
  if (models.length) {
    state = { ...state, model: models[0].name };
    modelSelect.value = state.model;
  }
  modelSelect.addEventListener("change", () => {
    state = { ...state, model: modelSelect.value };
    refreshPrediction();
  });

  const canvas = $("heatmap") as unknown as HTMLCanvasElement;
  canvas.addEventListener("click", (ev) => {
    if (!state.processmap) return;
    const rect = canvas.getBoundingClientRect();
    const model = heatmapModel(state.processmap, state.sliders);
    const cell = cellAt(model, DEFAULT_LAYOUT, ev.clientX - rect.left, ev.clientY - rect.top);
    if (cell) {
      state = applyCellClick(state, cell.i, cell.j);
      renderSliderLabels();
      renderHeatmap();
      refreshPrediction();
    }
  });

  refreshPrediction();
  refreshProcessmap();
  predictor.flush();
  mapper.flush();
}

boot().catch((err) => {
  const errBox = $("predict-error");
  errBox.textContent = `failed to reach the prediction API: ${err}`;
  errBox.style.display = "block";
});
