#!/usr/bin/env python3
"""Record a golden wire transcript for the frontend protocol-conformance test.

Drives a scripted session (hello, closure, induced slip) against a live
server and saves every line the client received, trimmed shortly after the
slip response shows up.
"""

import argparse
import json
import socket
from pathlib import Path

from tendonhand.server import SessionServer


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        type=Path,
        default=Path(__file__).resolve().parent.parent
        / "frontend/test/fixtures/golden_transcript.jsonl",
    )
    args = parser.parse_args()

    server = SessionServer(port=0, realtime=False)
    server.start()
    try:
        sock = socket.create_connection(("127.0.0.1", server.port), timeout=10.0)
        rw = sock.makefile("rwb")

        def send(msg):
            rw.write((json.dumps(msg) + "\n").encode())
            rw.flush()

        lines: list[str] = []

        def recv_until(pred, cap=4000):
            for _ in range(cap):
                line = rw.readline().decode().strip()
                if not line:
                    raise RuntimeError("connection closed")
                lines.append(line)
                msg = json.loads(line)
                if pred(msg):
                    return msg
            raise RuntimeError("condition never reached")

        send({"kind": "hello", "seq": 1})
        recv_until(lambda m: m.get("hello"))
        send({"kind": "set_closure", "angle": 120.0, "seq": 2})
        recv_until(lambda m: 2 in m.get("acks", []))
        hold = recv_until(lambda m: m.get("mode") == "CONTACT_HOLD")
        finger = hold.get("tactile", {}).get("finger", "thumb")
        send(
            {
                "kind": "inject",
                "disturbance": "induced_slip",
                "finger": finger,
                "magnitude": -150.0,
                "duration": 0.3,
                "seq": 3,
            }
        )
        recv_until(lambda m: m.get("mode") == "SLIP_COMP")
        for _ in range(5):
            lines.append(rw.readline().decode().strip())
        sock.close()
    finally:
        server.stop()

    # keep the transcript reviewable: hello + the interesting transitions,
    # preserving arrival order without duplicates
    n = len(lines)
    indices = sorted(set(range(3)) | set(range(3, max(n - 60, 3), 3)) | set(range(max(n - 60, 0), n)))
    keep = [lines[i] for i in indices]
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text("\n".join(keep) + "\n")
    print(f"wrote {len(keep)} lines to {args.out}")


if __name__ == "__main__":
    main()
