#!/usr/bin/env python3
"""Run every experiment into an artifacts directory and print the summaries."""

import argparse
import json
import time
from pathlib import Path

from tendonhand.experiments import EXPERIMENTS, run_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("artifacts"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--only", nargs="*", choices=EXPERIMENTS, default=None)
    args = parser.parse_args()

    for name in args.only or EXPERIMENTS:
        t0 = time.monotonic()
        result = run_experiment(name, None, args.out / name, seed=args.seed)
        took = time.monotonic() - t0
        summary = {k: v for k, v in result.items() if k != "artifacts"}
        print(f"{name:10s} {took:6.2f}s  {json.dumps(summary, default=str) if summary else ''}")
    print(f"artifacts under {args.out}/")


if __name__ == "__main__":
    main()
