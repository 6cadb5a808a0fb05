"""Telemetry tables (CSV) and run manifests (JSON)."""

from __future__ import annotations

import json
from pathlib import Path

from . import __version__
from .hand import FINGER_NAMES
from .simulate import TickRecord

_JOINT_COLS = [f"{name}_{j}" for name in FINGER_NAMES for j in ("mcp", "pip", "dip")]
_CONTACT_COLS = [f"contact_{name}" for name in FINGER_NAMES]

TELEMETRY_COLUMNS = (
    ["tick", "time", "mode", "agonist_encoder", "antagonist_encoder",
     "agonist_setpoint", "antagonist_setpoint"]
    + _JOINT_COLS
    + _CONTACT_COLS
    + ["fingertip_count", "tactile_finger", "tactile_x", "tactile_y",
       "is_contact", "is_slip", "deformation", "force"]
)


def _num(x: float) -> str:
    return repr(float(x))


def record_to_row(rec: TickRecord) -> list[str]:
    row = [
        str(rec.tick),
        _num(rec.time),
        rec.mode,
        _num(rec.agonist_encoder),
        _num(rec.antagonist_encoder),
        _num(rec.agonist_setpoint),
        _num(rec.antagonist_setpoint),
    ]
    for finger in rec.joints:
        row.extend(_num(a) for a in finger)
    row.extend(str(int(c)) for c in rec.fingertip_contacts)
    row.append(str(rec.fingertip_contact_count))
    row.append(rec.tactile_finger)
    if rec.tactile_center is None:
        row.extend(["", ""])
    else:
        row.extend([_num(rec.tactile_center[0]), _num(rec.tactile_center[1])])
    row.append(str(int(rec.is_contact)))
    row.append(str(int(rec.is_slip)))
    row.append(_num(rec.deformation))
    row.append(_num(rec.force))
    return row


def write_telemetry(path, records) -> None:
    lines = [",".join(TELEMETRY_COLUMNS)]
    lines.extend(",".join(record_to_row(r)) for r in records)
    Path(path).write_text("\n".join(lines) + "\n")


def read_telemetry(path) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


ANALYSIS_COLUMNS = [
    "time", "finger", "marker_count", "kernel_width", "center_x", "center_y",
    "contact_area", "is_contact", "is_slip", "deformation", "force",
]


def write_analysis(path, rows: list[dict]) -> None:
    """Per-processed-frame tactile analysis records as CSV."""
    lines = [",".join(ANALYSIS_COLUMNS)]
    for r in rows:
        center = r.get("center")
        lines.append(
            ",".join(
                [
                    _num(r["time"]),
                    r["finger"],
                    str(r["marker_count"]),
                    _num(r["kernel_width"]),
                    _num(center[0]) if center else "",
                    _num(center[1]) if center else "",
                    _num(r["contact_area"]),
                    str(int(r["is_contact"])),
                    str(int(r["is_slip"])),
                    _num(r["deformation"]),
                    _num(r["force"]),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(path, experiment: str, scenario_dict: dict, artifacts: list[str], extra: dict | None = None) -> None:
    doc = {
        "version": __version__,
        "experiment": experiment,
        "scenario": scenario_dict,
        "artifacts": sorted(artifacts),
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
