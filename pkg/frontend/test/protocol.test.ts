import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { describe, expect, it } from "vitest";

import { parseServerMessage } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));

describe("message validation", () => {
  it("rejects non-json", () => {
    expect(parseServerMessage("not json").error).toMatch(/unparseable/);
  });

  it("rejects unknown kinds", () => {
    expect(parseServerMessage('{"kind":"mystery"}').error).toMatch(/unknown kind/);
  });

  it("rejects states with a bad mode", () => {
    const line = JSON.stringify({
      kind: "state",
      tick: 1,
      time: 0.02,
      mode: "PANIC",
      encoders: { agonist: 700, antagonist: 820 },
      setpoints: { agonist: 700, antagonist: 820 },
      joints: {},
      fingertip_contact_count: 0,
    });
    expect(parseServerMessage(line).error).toMatch(/invalid mode/);
  });

  it("rejects malformed joint entries", () => {
    const line = JSON.stringify({
      kind: "state",
      tick: 1,
      time: 0.02,
      mode: "SYNC",
      encoders: { agonist: 700, antagonist: 820 },
      setpoints: { agonist: 700, antagonist: 820 },
      joints: { thumb: [0.1, 0.2] },
      fingertip_contact_count: 0,
    });
    expect(parseServerMessage(line).error).toMatch(/three angles/);
  });

  it("accepts error messages", () => {
    const out = parseServerMessage('{"kind":"error","message":"nope"}');
    expect(out.error).toBeUndefined();
    expect(out.msg?.kind).toBe("error");
  });
});

describe("golden transcript conformance", () => {
  const lines = readFileSync(join(here, "fixtures/golden_transcript.jsonl"), "utf-8")
    .split("\n")
    .filter((l) => l.trim().length > 0);

  it("has a meaningful number of recorded messages", () => {
    expect(lines.length).toBeGreaterThan(10);
  });

  it("every recorded line validates", () => {
    for (const line of lines) {
      const { msg, error } = parseServerMessage(line);
      expect(error, `line failed: ${line.slice(0, 120)}`).toBeUndefined();
      expect(msg).toBeDefined();
    }
  });

  it("covers the hello handshake with a full config snapshot", () => {
    const hello = lines
      .map((l) => parseServerMessage(l).msg)
      .find((m) => m?.kind === "state" && m.hello);
    expect(hello).toBeDefined();
    if (hello?.kind !== "state" || !hello.config) throw new Error("unreachable");
    expect(hello.config.finger_names).toEqual(["thumb", "index", "middle", "ring", "pinky"]);
    expect(hello.config.open_setpoints).toEqual([700, 820]);
    expect(hello.config.density_grid.nx).toBeGreaterThan(0);
    expect(hello.config.link_lengths).toHaveLength(5);
  });

  it("walks the reactive-grasp mode sequence", () => {
    const modes: string[] = [];
    for (const line of lines) {
      const msg = parseServerMessage(line).msg;
      if (msg?.kind === "state" && (modes.length === 0 || modes[modes.length - 1] !== msg.mode)) {
        modes.push(msg.mode);
      }
    }
    expect(modes).toContain("SYNC");
    expect(modes).toContain("CONTACT_HOLD");
    expect(modes).toContain("SLIP_COMP");
    expect(modes.indexOf("CONTACT_HOLD")).toBeGreaterThan(modes.indexOf("SYNC"));
    expect(modes.indexOf("SLIP_COMP")).toBeGreaterThan(modes.indexOf("CONTACT_HOLD"));
  });

  it("broadcast ticks never go backwards", () => {
    // hello replies are direct responses and may race an in-flight
    // broadcast; the monotonicity contract is on the broadcast stream
    let last = -1;
    for (const line of lines) {
      const msg = parseServerMessage(line).msg;
      if (msg?.kind === "state" && !msg.hello) {
        expect(msg.tick).toBeGreaterThanOrEqual(last);
        last = msg.tick;
      }
    }
  });
});
