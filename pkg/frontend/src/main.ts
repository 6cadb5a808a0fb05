// Browser bootstrap: wire the session model to the DOM panels.

import { UISessionModel } from "./session.js";
import { webSocketTransport } from "./transport.js";
import {
  drawGauge,
  drawHeatmap,
  drawSkeleton,
  makeStripChart,
  modeColor,
} from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const statusEl = el<HTMLSpanElement>("status");
const modeBadge = el<HTMLSpanElement>("mode-badge");
const slider = el<HTMLInputElement>("closure");
const sliderValue = el<HTMLSpanElement>("closure-value");
const slipBtn = el<HTMLButtonElement>("induce-slip");
const pushBtn = el<HTMLButtonElement>("push-object");
const resetBtn = el<HTMLButtonElement>("reset");
const scenarioSelect = el<HTMLSelectElement>("scenario-select");
const loadScenarioBtn = el<HTMLButtonElement>("load-scenario");
const logEl = el<HTMLDivElement>("event-log");
const skeletonCanvas = el<HTMLCanvasElement>("skeleton");
const heatmapCanvas = el<HTMLCanvasElement>("heatmap");
const chartCanvas = el<HTMLCanvasElement>("chart");
const gaugeCanvas = el<HTMLCanvasElement>("gauges");
const statsEl = el<HTMLDivElement>("stats");

const endpoint = `ws://${location.hostname || "127.0.0.1"}:${
  new URLSearchParams(location.search).get("port") ?? "7460"
}`;

const session = new UISessionModel(webSocketTransport);
const forceChart = makeStripChart(400);

slider.addEventListener("input", () => {
  sliderValue.textContent = `${slider.value} deg`;
  session.setClosure(Number(slider.value));
});
slipBtn.addEventListener("click", () => session.induceSlip());
pushBtn.addEventListener("click", () => {
  const finger = session.snapshot?.tactile?.finger ?? "index";
  session.inject("object_force", finger, 48.0, 1.0);
});
resetBtn.addEventListener("click", () => session.reset());
loadScenarioBtn.addEventListener("click", () => session.loadScenario(scenarioSelect.value));

let lastLoggedCount = 0;

function render(): void {
  statusEl.textContent = session.status;
  statusEl.className = `status ${session.status}`;
  const snap = session.snapshot;
  const cfg = session.config;
  if (snap) {
    modeBadge.textContent = snap.mode;
    modeBadge.style.background = modeColor(snap.mode);
    forceChart.push(snap.tactile?.force ?? 0);
    statsEl.textContent =
      `t=${snap.time.toFixed(2)} s   contacts=${snap.fingertip_contact_count}   ` +
      `d=${(snap.tactile?.deformation ?? 0).toFixed(3)}   F=${(snap.tactile?.force ?? 0).toFixed(2)} N` +
      (snap.tactile?.is_slip ? "   SLIP" : "");
  }
  if (snap && cfg) {
    const sctx = skeletonCanvas.getContext("2d");
    if (sctx) drawSkeleton(sctx, skeletonCanvas, cfg, snap);
    const gctx = gaugeCanvas.getContext("2d");
    if (gctx) {
      gctx.fillStyle = "#14181d";
      gctx.fillRect(0, 0, gaugeCanvas.width, gaugeCanvas.height);
      drawGauge(gctx, gaugeCanvas, "agonist", snap.encoders.agonist, snap.setpoints.agonist,
        [cfg.encoder_range[0], cfg.encoder_range[1]], 18);
      drawGauge(gctx, gaugeCanvas, "antagonist", snap.encoders.antagonist, snap.setpoints.antagonist,
        [cfg.encoder_range[0], cfg.encoder_range[1]], 46);
    }
    const cctx = chartCanvas.getContext("2d");
    if (cctx) forceChart.draw(cctx, chartCanvas, 10.0, 2.0);
    if (session.density) {
      const hctx = heatmapCanvas.getContext("2d");
      if (hctx) {
        drawHeatmap(
          hctx,
          heatmapCanvas,
          cfg.density_grid,
          session.density.values,
          snap.tactile?.center ?? null,
        );
      }
    }
  }
  if (session.log.length !== lastLoggedCount) {
    lastLoggedCount = session.log.length;
    logEl.innerHTML = session.log
      .slice(-80)
      .map((e) => `<div class="log-${e.kind}">${new Date(e.time).toLocaleTimeString()} ${e.text}</div>`)
      .join("");
    logEl.scrollTop = logEl.scrollHeight;
  }
}

session.onchange = () => {
  /* rendering is frame-driven; onchange only needs to exist */
};

function frame(): void {
  render();
  requestAnimationFrame(frame);
}

session.connect(endpoint);
requestAnimationFrame(frame);
