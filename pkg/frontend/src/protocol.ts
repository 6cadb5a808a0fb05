// Wire protocol mirror of the session server: newline-delimited JSON text.
// Every inbound message is schema-validated before the model sees it.

export interface DensityGridSpec {
  x0: number;
  y0: number;
  step: number;
  nx: number;
  ny: number;
}

export interface SessionConfig {
  finger_names: string[];
  placements: { x: number; y: number; angle: number }[];
  link_lengths: number[][];
  encoder_range: [number, number];
  open_setpoints: [number, number];
  closed_setpoints: [number, number];
  release_angle: number;
  density_grid: DensityGridSpec;
  image_size: [number, number];
}

export interface TactileSummary {
  finger: string;
  center: [number, number] | null;
  is_contact: boolean;
  is_slip: boolean;
  deformation: number;
  force: number;
  marker_count?: number;
  kernel_width?: number;
}

export interface DensityPayload {
  finger: string;
  scale: number;
  values: number[][];
}

export interface StateMessage {
  kind: "state";
  hello?: boolean;
  version?: string;
  tick_rate?: number;
  config?: SessionConfig;
  tick: number;
  time: number;
  mode: "SYNC" | "CONTACT_HOLD" | "SLIP_COMP";
  closure_angle: number;
  encoders: { agonist: number; antagonist: number };
  setpoints: { agonist: number; antagonist: number };
  joints: Record<string, [number, number, number]>;
  contacts: Record<string, boolean>;
  fingertip_contact_count: number;
  tactile?: TactileSummary;
  density?: DensityPayload;
  acks?: (number | string)[];
}

export interface ErrorMessage {
  kind: "error";
  message: string;
}

export type ServerMessage = StateMessage | ErrorMessage;

export type ClientMessage =
  | { kind: "hello"; seq?: number }
  | { kind: "set_closure"; angle: number; seq?: number }
  | {
      kind: "inject";
      disturbance: "induced_slip" | "object_force" | "indenter_move";
      finger?: string;
      magnitude?: number;
      duration?: number;
      seq?: number;
    }
  | { kind: "load_scenario"; scenario: unknown; seq?: number }
  | { kind: "reset"; seq?: number };

const MODES = new Set(["SYNC", "CONTACT_HOLD", "SLIP_COMP"]);

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isMotorPair(x: unknown): x is { agonist: number; antagonist: number } {
  return (
    typeof x === "object" &&
    x !== null &&
    isFiniteNumber((x as Record<string, unknown>).agonist) &&
    isFiniteNumber((x as Record<string, unknown>).antagonist)
  );
}

/** Parse one wire line; returns an error string instead of throwing. */
export function parseServerMessage(line: string): { msg?: ServerMessage; error?: string } {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (err) {
    return { error: `unparseable message: ${String(err)}` };
  }
  if (typeof raw !== "object" || raw === null || !("kind" in raw)) {
    return { error: "message is not an object with a kind" };
  }
  const msg = raw as Record<string, unknown>;
  if (msg.kind === "error") {
    if (typeof msg.message !== "string") return { error: "error message lacks text" };
    return { msg: msg as unknown as ErrorMessage };
  }
  if (msg.kind !== "state") return { error: `unknown kind ${String(msg.kind)}` };
  if (!isFiniteNumber(msg.tick) || !isFiniteNumber(msg.time)) {
    return { error: "state lacks tick/time" };
  }
  if (typeof msg.mode !== "string" || !MODES.has(msg.mode)) {
    return { error: `state has invalid mode ${String(msg.mode)}` };
  }
  if (!isMotorPair(msg.encoders) || !isMotorPair(msg.setpoints)) {
    return { error: "state lacks encoder/setpoint pairs" };
  }
  if (typeof msg.joints !== "object" || msg.joints === null) {
    return { error: "state lacks joints" };
  }
  for (const angles of Object.values(msg.joints as Record<string, unknown>)) {
    if (!Array.isArray(angles) || angles.length !== 3 || !angles.every(isFiniteNumber)) {
      return { error: "joint entry is not three angles" };
    }
  }
  if (!isFiniteNumber(msg.fingertip_contact_count)) {
    return { error: "state lacks fingertip_contact_count" };
  }
  if (msg.hello && (typeof msg.config !== "object" || msg.config === null)) {
    return { error: "hello state lacks config" };
  }
  return { msg: msg as unknown as StateMessage };
}

export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}
