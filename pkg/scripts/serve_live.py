#!/usr/bin/env python3
"""Start a live teleoperation session server (TCP + WebSocket on one port)."""

import argparse
from pathlib import Path

from tendonhand.scenario import load_scenario
from tendonhand.server import serve


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=7460)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--scenario", type=Path)
    args = parser.parse_args()
    scenario = load_scenario(args.scenario) if args.scenario else None
    serve(args.port, scenario, host=args.host)


if __name__ == "__main__":
    main()
