"""Live session service: fixed-rate sim loop behind a line-delimited socket.

One thread owns the simulation; socket threads only move JSON text lines in
and out of queues. The first client to connect steers the hand; later clients
watch. Both raw TCP (newline-delimited JSON) and WebSocket clients are
accepted on the same port, sniffed from the first bytes.
"""

from __future__ import annotations

import base64
import hashlib
import json
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .hand import FINGER_NAMES
from .scenario import Scenario
from .simulate import Session, TactileConfig

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def default_live_scenario(seed: int = 0) -> Scenario:
    from .experiments import _feedback_object

    return Scenario(
        name="live_session",
        control_mode="fsm",
        objects=_feedback_object(),
        gesture_trace=None,
        live=True,
        duration=3600.0,
        seed=seed,
    )


class _Transport:
    """Line-oriented adapter over a raw socket or a WebSocket connection."""

    def __init__(self, sock: socket.socket, is_websocket: bool, preread: bytes = b""):
        self.sock = sock
        self.is_websocket = is_websocket
        self.buffer = preread
        self.lock = threading.Lock()
        self.alive = True

    def send_line(self, text: str) -> None:
        if not self.alive:
            return
        try:
            with self.lock:
                if self.is_websocket:
                    self.sock.sendall(_ws_frame(text))
                else:
                    self.sock.sendall(text.encode("utf-8") + b"\n")
        except OSError:
            self.alive = False

    def recv_line(self) -> str | None:
        try:
            if self.is_websocket:
                return self._recv_ws()
            while b"\n" not in self.buffer:
                chunk = self.sock.recv(4096)
                if not chunk:
                    return None
                self.buffer += chunk
            line, self.buffer = self.buffer.split(b"\n", 1)
            return line.decode("utf-8", errors="replace")
        except OSError:
            return None

    def _recv_exact(self, n: int) -> bytes | None:
        while len(self.buffer) < n:
            chunk = self.sock.recv(4096)
            if not chunk:
                return None
            self.buffer += chunk
        out, self.buffer = self.buffer[:n], self.buffer[n:]
        return out

    def _recv_ws(self) -> str | None:
        while True:
            head = self._recv_exact(2)
            if head is None:
                return None
            opcode = head[0] & 0x0F
            masked = bool(head[1] & 0x80)
            length = head[1] & 0x7F
            if length == 126:
                ext = self._recv_exact(2)
                if ext is None:
                    return None
                length = struct.unpack(">H", ext)[0]
            elif length == 127:
                ext = self._recv_exact(8)
                if ext is None:
                    return None
                length = struct.unpack(">Q", ext)[0]
            mask = self._recv_exact(4) if masked else b"\0\0\0\0"
            if mask is None:
                return None
            payload = self._recv_exact(length)
            if payload is None:
                return None
            if masked:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                return None
            if opcode in (0x1, 0x2):
                return payload.decode("utf-8", errors="replace")
            # ping/pong/continuation: ignore and keep reading

    def close(self) -> None:
        self.alive = False
        try:
            self.sock.close()
        except OSError:
            pass


def _ws_frame(text: str) -> bytes:
    payload = text.encode("utf-8")
    n = len(payload)
    if n < 126:
        header = struct.pack(">BB", 0x81, n)
    elif n < 65536:
        header = struct.pack(">BBH", 0x81, 126, n)
    else:
        header = struct.pack(">BBQ", 0x81, 127, n)
    return header + payload


def _ws_handshake(sock: socket.socket, preread: bytes) -> bytes | None:
    """Complete the upgrade; returns leftover bytes or None on failure."""
    data = preread
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            return None
        data += chunk
    head, rest = data.split(b"\r\n\r\n", 1)
    key = None
    for line in head.split(b"\r\n"):
        if line.lower().startswith(b"sec-websocket-key:"):
            key = line.split(b":", 1)[1].strip().decode("ascii")
    if key is None:
        return None
    accept = base64.b64encode(hashlib.sha1((key + WS_GUID).encode("ascii")).digest()).decode()
    sock.sendall(
        (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
        ).encode("ascii")
    )
    return rest


@dataclass
class _Client:
    transport: _Transport
    authoritative: bool


class SessionServer:
    """Owns the live Session and the socket plumbing around it."""

    def __init__(
        self,
        scenario: Scenario | None = None,
        tactile: TactileConfig | None = None,
        host: str = "127.0.0.1",
        port: int = 7460,
        realtime: bool = True,
    ):
        self.scenario = scenario or default_live_scenario()
        self.tactile = tactile
        self.session = Session(self.scenario, tactile)
        self.host = host
        self.port = port
        self.realtime = realtime
        self.commands: queue.Queue = queue.Queue()
        self.clients: list[_Client] = []
        self.clients_lock = threading.Lock()
        self.stop_event = threading.Event()
        self.listener: socket.socket | None = None
        self.threads: list[threading.Thread] = []
        self.density_every = 5
        self.acks: list = []

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self.listener = socket.create_server((self.host, self.port))
        self.port = self.listener.getsockname()[1]
        self.listener.settimeout(0.2)
        accept = threading.Thread(target=self._accept_loop, name="accept", daemon=True)
        sim = threading.Thread(target=self._sim_loop, name="sim", daemon=True)
        self.threads = [accept, sim]
        accept.start()
        sim.start()

    def stop(self) -> None:
        self.stop_event.set()
        for t in self.threads:
            t.join(timeout=2.0)
        with self.clients_lock:
            for c in self.clients:
                c.transport.close()
            self.clients.clear()
        if self.listener is not None:
            self.listener.close()

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self.stop_event.is_set():
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    # -- socket side ---------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self.stop_event.is_set():
            try:
                sock, _ = self.listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            threading.Thread(target=self._client_setup, args=(sock,), daemon=True).start()

    def _client_setup(self, sock: socket.socket) -> None:
        try:
            first = sock.recv(4, socket.MSG_PEEK)
        except OSError:
            return
        if first.startswith(b"GET"):
            leftover = _ws_handshake(sock, b"")
            if leftover is None:
                sock.close()
                return
            transport = _Transport(sock, is_websocket=True, preread=leftover)
        else:
            transport = _Transport(sock, is_websocket=False)
        with self.clients_lock:
            authoritative = not any(c.authoritative for c in self.clients)
            client = _Client(transport=transport, authoritative=authoritative)
            self.clients.append(client)
        self._reader_loop(client)

    def _reader_loop(self, client: _Client) -> None:
        while not self.stop_event.is_set():
            line = client.transport.recv_line()
            if line is None:
                break
            if not line.strip():
                continue
            self.commands.put((client, line))
        client.transport.close()
        with self.clients_lock:
            if client in self.clients:
                self.clients.remove(client)

    # -- sim side ------------------------------------------------------------

    def _sim_loop(self) -> None:
        dt = self.scenario.dt
        next_tick = time.monotonic()
        while not self.stop_event.is_set():
            self._drain_commands()
            record = self.session.step()
            self._broadcast(self._state_message(record))
            if self.realtime:
                next_tick += dt
                delay = next_tick - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_tick = time.monotonic()

    def _drain_commands(self) -> None:
        self.acks: list = []
        while True:
            try:
                client, line = self.commands.get_nowait()
            except queue.Empty:
                return
            try:
                msg = json.loads(line)
                if not isinstance(msg, dict) or "kind" not in msg:
                    raise ValueError("message must be an object with a 'kind'")
                self._handle(client, msg)
                if "seq" in msg:
                    self.acks.append(msg["seq"])
            except Exception as exc:  # malformed input must not kill the loop
                client.transport.send_line(
                    json.dumps({"kind": "error", "message": str(exc)})
                )

    def _handle(self, client: _Client, msg: dict) -> None:
        kind = msg["kind"]
        if kind == "hello":
            client.transport.send_line(json.dumps(self._hello_message()))
            return
        if not client.authoritative:
            raise ValueError("read-only client: only the first connection may command")
        if kind == "set_closure":
            self.session.set_closure(float(msg["angle"]))
        elif kind == "inject":
            self.session.inject(
                kind=msg["disturbance"],
                magnitude=float(msg.get("magnitude", 1.0)),
                duration=float(msg.get("duration", 0.3)),
                finger=msg.get("finger", "index"),
                direction=tuple(msg.get("direction", (1.0, 0.0))),
            )
        elif kind == "load_scenario":
            spec = msg["scenario"]
            if isinstance(spec, str):
                scenario = self._named_scenario(spec)
            else:
                scenario = Scenario.from_dict(spec)
            self.scenario = scenario
            self.session = Session(scenario, self.tactile)
        elif kind == "reset":
            self.session = Session(self.scenario, self.tactile)
        else:
            raise ValueError(f"unknown message kind {kind!r}")

    def _named_scenario(self, name: str) -> Scenario:
        from .experiments import default_scenario

        if name == "live":
            return default_live_scenario(self.scenario.seed)
        scenario = default_scenario(name, self.scenario.seed)
        if scenario is None:
            raise ValueError(f"no named scenario {name!r}; use live, D1, D2 or D3")
        return scenario

    # -- messages --------------------------------------------------------------

    def _hello_message(self) -> dict:
        hand = self.scenario.hand
        tc = self.session.tactile_config
        return {
            "kind": "state",
            "hello": True,
            "version": __version__,
            "tick_rate": self.scenario.tick_rate,
            "config": {
                "finger_names": list(FINGER_NAMES),
                "placements": [p.to_dict() for p in hand.placements],
                "link_lengths": [list(f.link_lengths) for f in hand.fingers],
                "encoder_range": list(hand.encoder_range),
                "open_setpoints": list(self.scenario.controller.open_setpoints),
                "closed_setpoints": list(self.scenario.controller.closed_setpoints),
                "release_angle": self.scenario.controller.release_angle,
                "density_grid": {
                    "x0": tc.grid.x0, "y0": tc.grid.y0, "step": tc.grid.step,
                    "nx": tc.grid.nx, "ny": tc.grid.ny,
                },
                "image_size": list(tc.layout.image_size),
            },
            **self._snapshot_payload(),
        }

    def _snapshot_payload(self) -> dict:
        s = self.session
        rec = s.records[-1] if s.records else None
        payload = {
            "tick": s.tick,
            "time": s.time,
            "mode": s.controller.mode.value,
            "closure_angle": s.closure_angle,
            "encoders": {
                "agonist": s.hand_state.agonist_encoder,
                "antagonist": s.hand_state.antagonist_encoder,
            },
            "setpoints": {
                "agonist": s.controller.setpoints.agonist,
                "antagonist": s.controller.setpoints.antagonist,
            },
            "joints": {
                FINGER_NAMES[i]: list(s.hand_state.fingers[i].angles) for i in range(5)
            },
            "contacts": {
                FINGER_NAMES[i]: bool(s.report.fingers[i].fingertip_contact) for i in range(5)
            },
            "fingertip_contact_count": s.report.fingertip_contact_count,
        }
        if rec is not None:
            sensor = s.sensors[rec.tactile_finger]
            payload["tactile"] = {
                "finger": rec.tactile_finger,
                "center": list(rec.tactile_center) if rec.tactile_center else None,
                "is_contact": rec.is_contact,
                "is_slip": rec.is_slip,
                "deformation": rec.deformation,
                "force": rec.force,
                "marker_count": sensor.reading.marker_count,
                "kernel_width": sensor.kernel_width,
            }
        return payload

    def _state_message(self, record) -> dict:
        msg = {"kind": "state", **self._snapshot_payload()}
        if self.acks:
            msg["acks"] = self.acks
        if record.tick % self.density_every == 0:
            reading = self.session.sensors[record.tactile_finger].reading
            if reading.density is not None:
                dens = np.asarray(reading.density)
                peak = float(dens.max()) or 1.0
                msg["density"] = {
                    "finger": record.tactile_finger,
                    "scale": peak,
                    "values": np.rint(dens / peak * 255.0).astype(int).tolist(),
                }
        return msg

    def _broadcast(self, msg: dict) -> None:
        text = json.dumps(msg)
        with self.clients_lock:
            clients = list(self.clients)
        for c in clients:
            c.transport.send_line(text)


def serve(port: int, scenario: Scenario | None = None, host: str = "127.0.0.1") -> None:
    """Blocking entry point used by the CLI."""
    server = SessionServer(scenario=scenario, host=host, port=port)
    server.start()
    print(f"session server on {host}:{server.port} (scenario {server.scenario.name!r})", flush=True)
    try:
        while not server.stop_event.is_set():
            time.sleep(0.2)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
