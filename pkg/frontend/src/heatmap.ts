/** Canvas painting for the power-velocity heatmap. */

import type { HeatmapModel } from "./render.js";

export interface CanvasLayout {
  width: number;
  height: number;
  marginLeft: number;
  marginBottom: number;
}

export const DEFAULT_LAYOUT: CanvasLayout = {
  width: 460,
  height: 380,
  marginLeft: 52,
  marginBottom: 36,
};

/** Map a click position to (i, j) cell indices, or null outside the plot. */
export function cellAt(
  model: HeatmapModel,
  layout: CanvasLayout,
  x: number,
  y: number,
): { i: number; j: number } | null {
  const plotW = layout.width - layout.marginLeft;
  const plotH = layout.height - layout.marginBottom;
  if (x < layout.marginLeft || x >= layout.width || y < 0 || y >= plotH) return null;
  const n = model.pAxis.length;
  const m = model.vAxis.length;
  // velocity on the x axis, power on the y axis (low power at the bottom)
  const j = Math.floor(((x - layout.marginLeft) / plotW) * m);
  const i = Math.floor(((plotH - 1 - y) / plotH) * n);
  if (i < 0 || i >= n || j < 0 || j >= m) return null;
  return { i, j };
}

export function drawHeatmap(
  ctx: CanvasRenderingContext2D,
  model: HeatmapModel,
  layout: CanvasLayout = DEFAULT_LAYOUT,
): void {
  const plotW = layout.width - layout.marginLeft;
  const plotH = layout.height - layout.marginBottom;
  const n = model.pAxis.length;
  const m = model.vAxis.length;
  const cw = plotW / m;
  const ch = plotH / n;
  ctx.clearRect(0, 0, layout.width, layout.height);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < m; j++) {
      ctx.fillStyle = model.cells[i][j].color;
      ctx.fillRect(layout.marginLeft + j * cw, plotH - (i + 1) * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
  // marker at the current slider point
  const mx = layout.marginLeft + (model.marker.j + 0.5) * cw;
  const my = plotH - (model.marker.i + 0.5) * ch;
  ctx.beginPath();
  ctx.arc(mx, my, 6, 0, 2 * Math.PI);
  ctx.fillStyle = "#ffffff";
  ctx.fill();
  ctx.lineWidth = 2;
  ctx.strokeStyle = "#222222";
  ctx.stroke();

  ctx.fillStyle = "#333333";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "center";
  const vLo = model.vAxis[0];
  const vHi = model.vAxis[m - 1];
  for (const frac of [0, 0.5, 1]) {
    const v = vLo + frac * (vHi - vLo);
    ctx.fillText(v.toFixed(2), layout.marginLeft + frac * plotW, plotH + 16);
  }
  ctx.fillText("scan speed (m/s)", layout.marginLeft + plotW / 2, plotH + 32);
  ctx.save();
  ctx.translate(14, plotH / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText("beam power (W)", 0, 0);
  ctx.restore();
  ctx.textAlign = "right";
  const pLo = model.pAxis[0];
  const pHi = model.pAxis[n - 1];
  for (const frac of [0, 0.5, 1]) {
    const p = pLo + frac * (pHi - pLo);
    ctx.fillText(p.toFixed(0), layout.marginLeft - 6, plotH - frac * plotH + 4);
  }
}
