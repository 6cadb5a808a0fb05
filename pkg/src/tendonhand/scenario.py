"""Scenario files: what to simulate, with what hand, against what objects."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .control import ControllerConfig
from .hand import HandConfig, ObjectShape

CONFIG_DIR_ENV = "TENDONHAND_CONFIG_DIR"

DISTURBANCE_KINDS = ("indenter_move", "object_force", "induced_slip")


@dataclass(frozen=True)
class Disturbance:
    """Scheduled perturbation of the scene or the sensor stimulus.

    indenter_move: step the target finger's obstacle along its contact normal
    by magnitude mm (positive presses in). object_force: drift all obstacles
    along `direction` at magnitude mm/s for `duration`, pausing whenever the
    grip pins the object. induced_slip: drag the tactile stimulus across the
    target fingertip at magnitude px/s for `duration`.
    """

    time: float
    kind: str
    magnitude: float
    duration: float = 0.0
    finger: str = "index"
    direction: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self) -> None:
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.time < 0 or self.duration < 0:
            raise ValueError("disturbance times must be non-negative")

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "kind": self.kind,
            "magnitude": self.magnitude,
            "duration": self.duration,
            "finger": self.finger,
            "direction": list(self.direction),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Disturbance":
        return cls(
            time=d["time"],
            kind=d["kind"],
            magnitude=d["magnitude"],
            duration=d.get("duration", 0.0),
            finger=d.get("finger", "index"),
            direction=tuple(d.get("direction", (1.0, 0.0))),
        )


@dataclass(frozen=True)
class Scenario:
    """One reproducible run: configs, objects, operator trace, disturbances."""

    name: str = "scenario"
    hand: HandConfig = field(default_factory=HandConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    control_mode: str = "fsm"  # fsm | servo | open_loop
    objects: ObjectShape | None = None
    gesture_trace: tuple[tuple[float, float], ...] | None = None  # (time s, angle deg)
    live: bool = False
    disturbances: tuple[Disturbance, ...] = ()
    duration: float = 10.0
    seed: int = 0
    tick_rate: float = 50.0
    hold_penetration: float = 1.5  # mm of fingertip press that pins a drifting object

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.tick_rate <= 0:
            raise ValueError("tick_rate must be positive")
        if self.control_mode not in ("fsm", "servo", "open_loop"):
            raise ValueError(f"unknown control mode {self.control_mode!r}")
        if not self.live and self.gesture_trace is None and self.control_mode != "servo":
            raise ValueError("need a gesture trace unless live or servo-driven")
        times = [d.time for d in self.disturbances]
        if times != sorted(times):
            raise ValueError("disturbance schedule must be sorted by time")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate

    def closure_angle_at(self, t: float) -> float:
        """Piecewise-linear interpolation of the operator closure trace."""
        trace = self.gesture_trace
        if not trace:
            return 180.0
        if t <= trace[0][0]:
            return trace[0][1]
        for (t0, a0), (t1, a1) in zip(trace, trace[1:]):
            if t <= t1:
                if t1 == t0:
                    return a1
                return a0 + (a1 - a0) * (t - t0) / (t1 - t0)
        return trace[-1][1]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "hand": self.hand.to_dict(),
            "controller": self.controller.to_dict(),
            "control_mode": self.control_mode,
            "objects": self.objects.to_dict() if self.objects else None,
            "gesture_trace": [list(p) for p in self.gesture_trace] if self.gesture_trace else None,
            "live": self.live,
            "disturbances": [d.to_dict() for d in self.disturbances],
            "duration": self.duration,
            "seed": self.seed,
            "tick_rate": self.tick_rate,
            "hold_penetration": self.hold_penetration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(
            name=d.get("name", "scenario"),
            hand=_resolve_config(d.get("hand", "default"), HandConfig),
            controller=_resolve_config(d.get("controller", "default"), ControllerConfig),
            control_mode=d.get("control_mode", "fsm"),
            objects=ObjectShape.from_dict(d["objects"]) if d.get("objects") else None,
            gesture_trace=(
                tuple((float(t), float(a)) for t, a in d["gesture_trace"])
                if d.get("gesture_trace")
                else None
            ),
            live=d.get("live", False),
            disturbances=tuple(Disturbance.from_dict(x) for x in d.get("disturbances", ())),
            duration=d.get("duration", 10.0),
            seed=d.get("seed", 0),
            tick_rate=d.get("tick_rate", 50.0),
            hold_penetration=d.get("hold_penetration", 1.5),
        )


def _resolve_config(value, cls):
    """Inline dict, "default", or a file name looked up in the config dir."""
    if value == "default":
        return cls()
    if isinstance(value, dict):
        return cls.from_dict(value)
    if isinstance(value, str):
        base = Path(os.environ.get(CONFIG_DIR_ENV, "."))
        with open(base / value) as fh:
            return cls.from_dict(json.load(fh))
    raise ValueError(f"cannot resolve config from {value!r}")


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return Scenario.from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
