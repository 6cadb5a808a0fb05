// End-to-end against a live simulator process: the panel's session model on a
// raw TCP transport, asserting the teleoperation contract.

import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { UISessionModel } from "../src/session.js";
import { heatmapPoint } from "../src/render.js";
import type { StateMessage } from "../src/protocol.js";
import { tcpTransport } from "./tcp.js";

let proc: ChildProcess;
let port = 0;

function waitFor(
  session: UISessionModel,
  pred: (snap: StateMessage) => boolean,
  timeoutMs = 20000,
): Promise<StateMessage> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("timed out waiting for state")), timeoutMs);
    const prev = session.onchange;
    session.onchange = () => {
      prev();
      const snap = session.snapshot;
      if (snap && pred(snap)) {
        clearTimeout(timer);
        session.onchange = prev;
        resolve(snap);
      }
    };
  });
}

beforeAll(async () => {
  proc = spawn("python3", ["-m", "tendonhand.cli", "serve", "--port", "0"], {
    cwd: new URL("../..", import.meta.url).pathname,
    stdio: ["ignore", "pipe", "inherit"],
  });
  port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server never announced its port")), 15000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      const m = chunk.toString().match(/session server on [\d.]+:(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(Number(m[1]));
      }
    });
  });
}, 30000);

afterAll(() => {
  proc?.kill();
});

describe("live session end-to-end", () => {
  it("runs the full teleoperation contract", async () => {
    const session = new UISessionModel(tcpTransport);
    session.connect(`tcp://127.0.0.1:${port}`);
    await waitFor(session, () => session.status === "connected" && session.config !== null);

    // hello config snapshot rendered state
    expect(session.config!.finger_names).toHaveLength(5);
    expect(session.config!.open_setpoints).toEqual([700, 820]);

    // slider change reflects in setpoints within one tick: the state that
    // acks the command already carries the mapped values (120 -> (500, 580))
    session.setClosure(120);
    const action = await waitFor(session, () =>
      session.log.some((e) => e.kind === "action" && e.text.startsWith("set_closure")),
    ).then(() => session.log.filter((e) => e.kind === "action").pop()!);
    const acked = await waitFor(session, (s) => (s.acks ?? []).includes(action.seq!));
    expect(acked.setpoints.agonist).toBeCloseTo(500, 6);
    expect(acked.setpoints.antagonist).toBeCloseTo(580, 6);

    // closing onto the default scene object must reach CONTACT_HOLD
    const hold = await waitFor(session, (s) => s.mode === "CONTACT_HOLD");
    expect(hold.fingertip_contact_count).toBeGreaterThan(0);

    // induce slip: the mode badge flips within two snapshots of the ack
    const before = session.snapshot!.tick;
    session.induceSlip();
    const slipAction = session.log.filter((e) => e.kind === "action").pop()!;
    const ackSnap = await waitFor(
      session,
      (s) => s.tick > before && (s.acks ?? []).includes(slipAction.seq!),
    );
    const slip = await waitFor(session, (s) => s.mode === "SLIP_COMP");
    expect(slip.tick - ackSnap.tick).toBeLessThanOrEqual(2);

    // heatmap marker position equals the transmitted center, mapped exactly
    const withDensity = await waitFor(
      session,
      (s) => session.density !== null && s.tactile?.center != null,
    );
    const center = withDensity.tactile!.center!;
    const grid = session.config!.density_grid;
    const canvas = { width: 280, height: 280 };
    const marker = heatmapPoint(grid, canvas, center[0], center[1]);
    const backX = grid.x0 + (marker.x / (canvas.width - 1)) * grid.step * (grid.nx - 1);
    const backY = grid.y0 + (marker.y / (canvas.height - 1)) * grid.step * (grid.ny - 1);
    expect(backX).toBeCloseTo(center[0], 6);
    expect(backY).toBeCloseTo(center[1], 6);
    expect(session.density!.values.length).toBe(grid.ny);

    // opening wide releases the grasp back to gesture sync
    session.setClosure(176);
    const released = await waitFor(session, (s) => s.mode === "SYNC");
    expect(released.mode).toBe("SYNC");

    session.disconnect();
  }, 60000);

  it("second client is read-only but still sees broadcasts", async () => {
    const a = new UISessionModel(tcpTransport);
    a.connect(`tcp://127.0.0.1:${port}`);
    await waitFor(a, () => a.status === "connected");
    const b = new UISessionModel(tcpTransport);
    b.connect(`tcp://127.0.0.1:${port}`);
    await waitFor(b, () => b.status === "connected");
    b.setClosure(90);
    await new Promise((r) => setTimeout(r, 300));
    expect(b.log.some((e) => e.kind === "error" && e.text.includes("read-only"))).toBe(true);
    expect(b.snapshot).not.toBeNull(); // broadcasts still flow
    a.disconnect();
    b.disconnect();
  }, 30000);
});
