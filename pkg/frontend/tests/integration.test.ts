/** End-to-end checks against a live prediction server (see server.setup.ts). */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { ApiClient, PredictRequest, PredictResponse } from "../src/api.js";
import { heatmapModel, predictionPanel } from "../src/render.js";
import { DebouncedRequester } from "../src/scheduler.js";
import { DEFAULT_SLIDERS } from "../src/state.js";

const { baseUrl } = JSON.parse(
  readFileSync(join(__dirname, ".server.json"), "utf-8"),
) as { baseUrl: string };

const api = new ApiClient(baseUrl);

const PREDICT_REQ: PredictRequest = {
  model: "depth_rf",
  process: "LPBF",
  material: "SS316L",
  power_w: 220,
  velocity_m_s: 0.9,
  beam_diameter_um: 85,
  layer_thickness_um: 32,
};

describe("live server", () => {
  it("lists materials and the two fixture models", async () => {
    const materials = await api.materials();
    expect(materials.map((m) => m.name)).toContain("SS316L");
    const models = await api.models();
    expect(models.map((m) => m.name).sort()).toEqual(["defect_rf", "depth_rf"]);
  });

  it("heatmap cells equal the server payload exactly", async () => {
    const pm = await api.processmap({
      model: "defect_rf",
      material: "SS316L",
      p_range: [60, 350],
      v_range: [0.3, 2.0],
      resolution: 12,
      fixed: { beam_diameter_um: 85, layer_thickness_um: 32, process: "LPBF" },
    });
    const model = heatmapModel(pm, { ...DEFAULT_SLIDERS });
    expect(model.cells.length).toBe(12);
    for (let i = 0; i < pm.grid.length; i++) {
      for (let j = 0; j < pm.grid[i].length; j++) {
        expect(model.cells[i][j].classId).toBe(pm.grid[i][j]);
        expect(model.cells[i][j].className).toBe(pm.classes[pm.grid[i][j]]);
      }
    }
  });

  it("prediction panel shows only server-provided numbers", async () => {
    const response = await api.predict(PREDICT_REQ);
    const panel = predictionPanel(response, null);
    expect(panel.geometry.length).toBe(1);
    expect(panel.geometry[0].valueUm).toBe(response.depth_um);
    expect(panel.geometry[0].rosenthalUm).toBe(response.rosenthal?.depth_um);
  });

  it("slider change issues one request and updates within 200 ms", async () => {
    let issued = 0;
    let applied: PredictResponse | null = null;
    let appliedAt = 0;
    const requester = new DebouncedRequester<PredictRequest, PredictResponse>(
      (req) => {
        issued += 1;
        return api.predict(req);
      },
      (res) => {
        applied = res;
        appliedAt = performance.now();
      },
    );

    // a burst of slider movements inside the debounce window
    for (let k = 0; k < 6; k++) {
      requester.request({ ...PREDICT_REQ, power_w: 150 + 10 * k });
      expect(requester.inFlightCount).toBeLessThanOrEqual(1);
    }
    const start = performance.now();
    requester.flush(); // debounce elapsed: the single request goes out now
    expect(requester.inFlightCount).toBeLessThanOrEqual(1);
    while (applied === null && performance.now() - start < 5000) {
      await new Promise((r) => setTimeout(r, 5));
    }
    expect(issued).toBe(1);
    expect(applied).not.toBeNull();
    expect(appliedAt - start).toBeLessThan(200);
    const panel = predictionPanel(applied!, null);
    expect(panel.geometry[0].valueUm).toBe(applied!.depth_um);
  });

  it("surfaces server-side validation errors inline", async () => {
    const bad = { ...PREDICT_REQ, power_w: -5 };
    await expect(api.predict(bad)).rejects.toThrow(/power/);
  });
});
