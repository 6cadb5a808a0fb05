import { describe, expect, it } from "vitest";

import { heatmapPoint, modeColor, skeletonPoints } from "../src/render.js";

describe("skeletonPoints", () => {
  it("matches the simulator's forward kinematics on a frozen pose", () => {
    // link (45, 35, 35) at angles (0.3, 0.4, 0.5) puts the tip at
    // (82.44213, 68.46742) in the simulator's finger frame
    const pts = skeletonPoints([45, 35, 35], [0.3, 0.4, 0.5], { x: 0, y: 0, angle: 0 });
    expect(pts).toHaveLength(4);
    expect(pts[3]!.x).toBeCloseTo(82.44213, 4);
    expect(pts[3]!.y).toBeCloseTo(68.46742, 4);
  });

  it("extends straight when all angles are zero", () => {
    const pts = skeletonPoints([45, 35, 35], [0, 0, 0], { x: 2, y: 5, angle: 0 });
    expect(pts[3]!.x).toBeCloseTo(117);
    expect(pts[3]!.y).toBeCloseTo(5);
  });

  it("applies the placement rotation", () => {
    const pts = skeletonPoints([45, 35, 35], [0, 0, 0], { x: 0, y: 0, angle: Math.PI / 2 });
    expect(pts[3]!.x).toBeCloseTo(0, 9);
    expect(pts[3]!.y).toBeCloseTo(115, 9);
  });
});

describe("heatmapPoint", () => {
  const grid = { x0: 64, y0: 64, step: 2, nx: 57, ny: 57 };
  const canvas = { width: 280, height: 280 };

  it("maps the grid origin to the canvas origin", () => {
    const p = heatmapPoint(grid, canvas, 64, 64);
    expect(p.x).toBeCloseTo(0);
    expect(p.y).toBeCloseTo(0);
  });

  it("maps the far grid corner to the far canvas corner", () => {
    const p = heatmapPoint(grid, canvas, 64 + 2 * 56, 64 + 2 * 56);
    expect(p.x).toBeCloseTo(canvas.width - 1);
    expect(p.y).toBeCloseTo(canvas.height - 1);
  });

  it("round-trips a transmitted contact center to its grid cell", () => {
    const center: [number, number] = [120, 134];
    const p = heatmapPoint(grid, canvas, center[0], center[1]);
    // invert the mapping: the pixel must land back on the same sensor coords
    const backX = grid.x0 + (p.x / (canvas.width - 1)) * grid.step * (grid.nx - 1);
    const backY = grid.y0 + (p.y / (canvas.height - 1)) * grid.step * (grid.ny - 1);
    expect(backX).toBeCloseTo(center[0], 9);
    expect(backY).toBeCloseTo(center[1], 9);
  });
});

describe("modeColor", () => {
  it("distinguishes the three control modes", () => {
    const colors = new Set([modeColor("SYNC"), modeColor("CONTACT_HOLD"), modeColor("SLIP_COMP")]);
    expect(colors.size).toBe(3);
  });
});
