"""Command-line entry points: run experiments, serve live sessions, replay."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import EXPERIMENTS, run_experiment
from .replay import replay
from .scenario import load_scenario
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tendonhand",
        description="Simulator and control stack for a dual-tendon underactuated hand",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a named experiment")
    run_p.add_argument("experiment", choices=EXPERIMENTS)
    run_p.add_argument("--scenario", type=Path, help="scenario JSON (defaults per experiment)")
    run_p.add_argument("--out", type=Path, required=True, help="output directory")
    run_p.add_argument("--seed", type=int, default=None)

    serve_p = sub.add_parser("serve", help="serve a live teleoperation session")
    serve_p.add_argument("--port", type=int, default=7460)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--scenario", type=Path, help="scenario JSON (default: live grasp scene)")

    replay_p = sub.add_parser("replay", help="verify a telemetry artifact regenerates byte-for-byte")
    replay_p.add_argument("telemetry", type=Path)
    replay_p.add_argument("--manifest", type=Path, help="manifest path (default: sibling manifest.json)")

    args = parser.parse_args(argv)

    if args.command == "run":
        scenario = load_scenario(args.scenario) if args.scenario else None
        result = run_experiment(args.experiment, scenario, args.out, seed=args.seed)
        print(json.dumps({k: v for k, v in result.items()}, indent=2, default=str))
        return 0

    if args.command == "serve":
        scenario = load_scenario(args.scenario) if args.scenario else None
        serve(args.port, scenario, host=args.host)
        return 0

    if args.command == "replay":
        report = replay(args.telemetry, args.manifest)
        if report.identical:
            print(f"{report.artifact}: identical (zero divergences)")
            return 0
        print(
            f"{report.artifact}: DIVERGED at line {report.first_divergence_line}"
            + (f" (tick {report.first_divergence_tick})" if report.first_divergence_tick else "")
        )
        if report.detail:
            print(report.detail)
        return 1

    return 2


if __name__ == "__main__":
    sys.exit(main())
