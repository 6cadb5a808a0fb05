// Drawing for the operator panels. The geometry helpers are pure so tests can
// pin them: skeleton joint positions replicate the simulator's forward
// kinematics, and the heatmap marker transform is the exact inverse of the
// density-grid-to-canvas mapping.

import { DensityGridSpec, SessionConfig, StateMessage } from "./protocol.js";

export interface Pt {
  x: number;
  y: number;
}

/** Planar chain points (base, 3 joints' ends) for one finger in hand frame. */
export function skeletonPoints(
  linkLengths: number[],
  angles: [number, number, number],
  placement: { x: number; y: number; angle: number },
): Pt[] {
  const pts: Pt[] = [{ x: placement.x, y: placement.y }];
  let heading = placement.angle;
  let cx = placement.x;
  let cy = placement.y;
  for (let i = 0; i < 3; i += 1) {
    heading += angles[i] ?? 0;
    cx += (linkLengths[i] ?? 0) * Math.cos(heading);
    cy += (linkLengths[i] ?? 0) * Math.sin(heading);
    pts.push({ x: cx, y: cy });
  }
  return pts;
}

export interface CanvasBox {
  width: number;
  height: number;
}

/** Map a density-grid coordinate (sensor px) onto heatmap canvas pixels. */
export function heatmapPoint(
  grid: DensityGridSpec,
  canvas: CanvasBox,
  x: number,
  y: number,
): Pt {
  const spanX = grid.step * (grid.nx - 1);
  const spanY = grid.step * (grid.ny - 1);
  return {
    x: ((x - grid.x0) / spanX) * (canvas.width - 1),
    y: ((y - grid.y0) / spanY) * (canvas.height - 1),
  };
}

const MODE_COLORS: Record<string, string> = {
  SYNC: "#2e86de",
  CONTACT_HOLD: "#27ae60",
  SLIP_COMP: "#e74c3c",
};

export function modeColor(mode: string): string {
  return MODE_COLORS[mode] ?? "#888";
}

// hand-frame drawing window for the skeleton view, mm
const VIEW = { minX: -60, maxX: 130, minY: -120, maxY: 130 };

function toCanvas(p: Pt, canvas: CanvasBox): Pt {
  const sx = (p.x - VIEW.minX) / (VIEW.maxX - VIEW.minX);
  const sy = (p.y - VIEW.minY) / (VIEW.maxY - VIEW.minY);
  // +y (flexion) points up on screen
  return { x: sx * canvas.width, y: canvas.height - sy * canvas.height };
}

export function drawSkeleton(
  ctx: CanvasRenderingContext2D,
  canvas: CanvasBox,
  config: SessionConfig,
  snapshot: StateMessage,
): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#14181d";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  config.finger_names.forEach((name, i) => {
    const angles = snapshot.joints[name];
    const lengths = config.link_lengths[i];
    const placement = config.placements[i];
    if (!angles || !lengths || !placement) return;
    const pts = skeletonPoints(lengths, angles, placement).map((p) => toCanvas(p, canvas));
    ctx.strokeStyle = snapshot.contacts[name] ? "#f1c40f" : "#7f8c8d";
    ctx.lineWidth = 4;
    ctx.lineCap = "round";
    ctx.beginPath();
    pts.forEach((p, k) => (k === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
    ctx.stroke();
    ctx.fillStyle = "#ecf0f1";
    for (const p of pts) {
      ctx.beginPath();
      ctx.arc(p.x, p.y, 3, 0, Math.PI * 2);
      ctx.fill();
    }
    const base = pts[0];
    if (base) {
      ctx.fillStyle = "#95a5a6";
      ctx.font = "10px sans-serif";
      ctx.fillText(name, base.x - 34, base.y + 3);
    }
  });
}

/** Blue-to-yellow colormap for normalized density (0..255). */
function densityColor(v: number): [number, number, number] {
  const t = v / 255;
  return [Math.round(40 + 200 * t), Math.round(40 + 190 * t), Math.round(90 + 40 * (1 - t))];
}

export function drawHeatmap(
  ctx: CanvasRenderingContext2D,
  canvas: CanvasBox,
  grid: DensityGridSpec,
  values: number[][],
  center: [number, number] | null,
): void {
  const image = ctx.createImageData(canvas.width, canvas.height);
  const ny = values.length;
  const nx = ny > 0 ? values[0]!.length : 0;
  for (let py = 0; py < canvas.height; py += 1) {
    const gy = Math.min(Math.floor((py / canvas.height) * ny), ny - 1);
    for (let px = 0; px < canvas.width; px += 1) {
      const gx = Math.min(Math.floor((px / canvas.width) * nx), nx - 1);
      const v = values[gy]?.[gx] ?? 0;
      const [r, g, b] = densityColor(v);
      const idx = (py * canvas.width + px) * 4;
      image.data[idx] = r;
      image.data[idx + 1] = g;
      image.data[idx + 2] = b;
      image.data[idx + 3] = 255;
    }
  }
  ctx.putImageData(image, 0, 0);
  if (center !== null) {
    const p = heatmapPoint(grid, canvas, center[0], center[1]);
    ctx.strokeStyle = "#2ecc71";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(p.x, p.y, 7, 0, Math.PI * 2);
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(p.x - 10, p.y);
    ctx.lineTo(p.x + 10, p.y);
    ctx.moveTo(p.x, p.y - 10);
    ctx.lineTo(p.x, p.y + 10);
    ctx.stroke();
  }
}

export interface StripChart {
  push(value: number): void;
  draw(ctx: CanvasRenderingContext2D, canvas: CanvasBox, scaleMax: number, target?: number): void;
}

export function makeStripChart(capacity = 300): StripChart {
  const values: number[] = [];
  return {
    push(value: number) {
      values.push(value);
      if (values.length > capacity) values.shift();
    },
    draw(ctx, canvas, scaleMax, target) {
      ctx.fillStyle = "#14181d";
      ctx.fillRect(0, 0, canvas.width, canvas.height);
      if (target !== undefined) {
        const ty = canvas.height - (target / scaleMax) * canvas.height;
        ctx.strokeStyle = "#7f8c8d";
        ctx.setLineDash([4, 4]);
        ctx.beginPath();
        ctx.moveTo(0, ty);
        ctx.lineTo(canvas.width, ty);
        ctx.stroke();
        ctx.setLineDash([]);
      }
      ctx.strokeStyle = "#1abc9c";
      ctx.lineWidth = 2;
      ctx.beginPath();
      values.forEach((v, i) => {
        const x = (i / Math.max(capacity - 1, 1)) * canvas.width;
        const y = canvas.height - (Math.min(v, scaleMax) / scaleMax) * canvas.height;
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
    },
  };
}

export function drawGauge(
  ctx: CanvasRenderingContext2D,
  canvas: CanvasBox,
  label: string,
  encoder: number,
  setpoint: number,
  range: [number, number],
  yOffset: number,
): void {
  const [lo, hi] = range;
  const w = canvas.width - 90;
  const frac = (v: number) => ((v - lo) / (hi - lo)) * w + 70;
  ctx.fillStyle = "#95a5a6";
  ctx.font = "11px sans-serif";
  ctx.fillText(label, 6, yOffset + 4);
  ctx.strokeStyle = "#34495e";
  ctx.lineWidth = 6;
  ctx.beginPath();
  ctx.moveTo(70, yOffset);
  ctx.lineTo(70 + w, yOffset);
  ctx.stroke();
  ctx.strokeStyle = "#f39c12";
  ctx.beginPath();
  ctx.moveTo(frac(setpoint), yOffset - 8);
  ctx.lineTo(frac(setpoint), yOffset + 8);
  ctx.stroke();
  ctx.strokeStyle = "#1abc9c";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.arc(frac(encoder), yOffset, 5, 0, Math.PI * 2);
  ctx.stroke();
}
