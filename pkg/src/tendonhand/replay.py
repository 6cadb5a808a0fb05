"""Replay verification: regenerate a run from its manifest, compare bytes."""

from __future__ import annotations

import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .experiments import run_experiment
from .scenario import Scenario
from .telemetry import read_manifest


@dataclass
class ReplayReport:
    artifact: str
    identical: bool
    first_divergence_line: int | None = None  # 1-based; line 1 is the header
    detail: str = ""

    @property
    def first_divergence_tick(self) -> int | None:
        if self.first_divergence_line is None or self.first_divergence_line <= 1:
            return None
        return self.first_divergence_line - 1


def _compare_bytes(original: bytes, regenerated: bytes) -> tuple[int | None, str]:
    if original == regenerated:
        return None, ""
    o_lines = original.split(b"\n")
    r_lines = regenerated.split(b"\n")
    for i, (a, b) in enumerate(zip(o_lines, r_lines), start=1):
        if a != b:
            return i, f"line {i}: {a[:80]!r} != {b[:80]!r}"
    n = min(len(o_lines), len(r_lines))
    return n + 1, f"length mismatch after line {n}"


def replay(artifact_path, manifest_path=None) -> ReplayReport:
    """Re-run the producing experiment and compare the named artifact.

    Raises on a manifest version mismatch; divergences are reported, not
    raised, so callers can inspect the first differing telemetry line.
    """
    artifact_path = Path(artifact_path)
    manifest_path = Path(manifest_path) if manifest_path else artifact_path.parent / "manifest.json"
    manifest = read_manifest(manifest_path)
    if manifest.get("version") != __version__:
        raise ValueError(
            f"manifest version {manifest.get('version')!r} does not match {__version__}"
        )
    name = manifest["experiment"]
    scenario = None
    scenario_dict = manifest.get("scenario")
    if isinstance(scenario_dict, dict) and "duration" in scenario_dict:
        scenario = Scenario.from_dict(scenario_dict)
    seed = scenario.seed if scenario else manifest.get("scenario", {}).get("seed", 0)
    with tempfile.TemporaryDirectory() as tmp:
        run_experiment(name, scenario, tmp, seed=seed)
        regenerated = Path(tmp) / artifact_path.name
        if not regenerated.exists():
            return ReplayReport(
                artifact=str(artifact_path),
                identical=False,
                first_divergence_line=0,
                detail=f"experiment {name} did not produce {artifact_path.name}",
            )
        line, detail = _compare_bytes(artifact_path.read_bytes(), regenerated.read_bytes())
    return ReplayReport(
        artifact=str(artifact_path),
        identical=line is None,
        first_divergence_line=line,
        detail=detail,
    )
