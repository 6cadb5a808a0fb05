// Operator-side session model: connection lifecycle, freshest-snapshot state,
// command dispatch, and the event log that pairs actions with server acks.
// The model never touches simulation state except by sending WireMessages.

import {
  ClientMessage,
  DensityPayload,
  SessionConfig,
  StateMessage,
  encodeClientMessage,
  parseServerMessage,
} from "./protocol.js";
import { Transport, TransportFactory } from "./transport.js";

export type ConnectionStatus = "disconnected" | "connecting" | "connected";

export interface LogEntry {
  time: number; // wall clock ms
  text: string;
  kind: "action" | "ack" | "error" | "info";
  seq?: number | string;
}

export interface SessionOptions {
  /** Debounce for closure commands, ms. */
  closureDebounceMs?: number;
  /** Reconnect backoff start/cap, ms. */
  backoffStartMs?: number;
  backoffCapMs?: number;
  now?: () => number;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
}

export class UISessionModel {
  status: ConnectionStatus = "disconnected";
  config: SessionConfig | null = null;
  snapshot: StateMessage | null = null;
  density: DensityPayload | null = null;
  log: LogEntry[] = [];
  staleDropped = 0;

  onchange: () => void = () => {};

  private transport: Transport | null = null;
  private endpoint = "";
  private factory: TransportFactory;
  private seqCounter = 0;
  private pending = new Map<number | string, string>();
  private backoff: number;
  private readonly backoffStart: number;
  private readonly backoffCap: number;
  private readonly debounceMs: number;
  private closureTimer: unknown = null;
  private pendingClosure: number | null = null;
  private reconnectTimer: unknown = null;
  private closedByUser = false;
  private readonly now: () => number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;

  constructor(factory: TransportFactory, options: SessionOptions = {}) {
    this.factory = factory;
    this.debounceMs = options.closureDebounceMs ?? 50;
    this.backoffStart = options.backoffStartMs ?? 250;
    this.backoffCap = options.backoffCapMs ?? 4000;
    this.backoff = this.backoffStart;
    this.now = options.now ?? (() => Date.now());
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = options.clearTimer ?? ((h) => clearTimeout(h as number));
  }

  connect(endpoint: string): void {
    this.endpoint = endpoint;
    this.closedByUser = false;
    this.openTransport();
  }

  disconnect(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) this.clearTimer(this.reconnectTimer);
    this.transport?.close();
    this.transport = null;
    this.status = "disconnected";
    this.onchange();
  }

  private openTransport(): void {
    this.status = "connecting";
    this.onchange();
    this.transport = this.factory(this.endpoint, {
      onOpen: () => {
        this.status = "connected";
        this.backoff = this.backoffStart;
        this.logEntry("info", `connected to ${this.endpoint}`);
        this.sendNow({ kind: "hello", seq: this.nextSeq("hello") });
        this.onchange();
      },
      onClose: () => {
        const wasConnected = this.status === "connected";
        this.status = "disconnected";
        this.transport = null;
        if (wasConnected) this.logEntry("info", "connection lost");
        this.onchange();
        if (!this.closedByUser) this.scheduleReconnect();
      },
      onLine: (line) => this.handleLine(line),
    });
  }

  private scheduleReconnect(): void {
    const delay = this.backoff;
    this.backoff = Math.min(this.backoff * 2, this.backoffCap);
    this.logEntry("info", `reconnecting in ${delay} ms`);
    this.reconnectTimer = this.setTimer(() => this.openTransport(), delay);
  }

  private handleLine(line: string): void {
    const { msg, error } = parseServerMessage(line);
    if (error !== undefined || msg === undefined) {
      this.logEntry("error", `invalid message dropped: ${error}`);
      this.onchange();
      return;
    }
    if (msg.kind === "error") {
      this.logEntry("error", `server: ${msg.message}`);
      this.onchange();
      return;
    }
    // stale snapshots are dropped, never reordered
    if (this.snapshot !== null && msg.tick < this.snapshot.tick) {
      this.staleDropped += 1;
      return;
    }
    if (msg.config) this.config = msg.config;
    if (msg.density) this.density = msg.density;
    this.snapshot = msg;
    for (const seq of msg.acks ?? []) {
      const described = this.pending.get(seq);
      if (described !== undefined) {
        this.pending.delete(seq);
        this.logEntry("ack", `ack #${seq}: ${described}`, seq);
      }
    }
    this.onchange();
  }

  private nextSeq(description: string): number {
    this.seqCounter += 1;
    this.pending.set(this.seqCounter, description);
    return this.seqCounter;
  }

  private sendNow(msg: ClientMessage): void {
    if (this.transport === null || this.status !== "connected") {
      this.logEntry("error", `not connected; dropped ${msg.kind}`);
      this.onchange();
      return;
    }
    this.transport.send(encodeClientMessage(msg));
  }

  /** Slider input: debounced so one gesture change sends one message. */
  setClosure(angle: number): void {
    this.pendingClosure = angle;
    if (this.closureTimer !== null) return;
    this.closureTimer = this.setTimer(() => {
      this.closureTimer = null;
      if (this.pendingClosure === null) return;
      const value = this.pendingClosure;
      this.pendingClosure = null;
      const seq = this.nextSeq(`set_closure ${value.toFixed(1)}`);
      this.logEntry("action", `set_closure ${value.toFixed(1)}`, seq);
      this.sendNow({ kind: "set_closure", angle: value, seq });
      this.onchange();
    }, this.debounceMs);
  }

  induceSlip(finger?: string): void {
    const target = finger ?? this.snapshot?.tactile?.finger ?? "thumb";
    const seq = this.nextSeq(`induce slip on ${target}`);
    this.logEntry("action", `induce slip on ${target}`, seq);
    this.sendNow({
      kind: "inject",
      disturbance: "induced_slip",
      finger: target,
      magnitude: -150.0,
      duration: 0.3,
      seq,
    });
    this.onchange();
  }

  inject(disturbance: "object_force" | "indenter_move", finger: string, magnitude: number, duration = 0.5): void {
    const seq = this.nextSeq(`${disturbance} ${magnitude} on ${finger}`);
    this.logEntry("action", `${disturbance} ${magnitude} on ${finger}`, seq);
    this.sendNow({ kind: "inject", disturbance, finger, magnitude, duration, seq });
    this.onchange();
  }

  reset(): void {
    const seq = this.nextSeq("reset");
    this.logEntry("action", "reset", seq);
    this.sendNow({ kind: "reset", seq });
    this.onchange();
  }

  loadScenario(scenario: unknown): void {
    const seq = this.nextSeq("load_scenario");
    this.logEntry("action", "load_scenario", seq);
    this.sendNow({ kind: "load_scenario", scenario, seq });
    this.onchange();
  }

  private logEntry(kind: LogEntry["kind"], text: string, seq?: number | string): void {
    this.log.push({ time: this.now(), text, kind, seq });
    if (this.log.length > 500) this.log.splice(0, this.log.length - 500);
  }
}
