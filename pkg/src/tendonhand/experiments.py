"""Experiment runners: single-finger gestures, workspaces, grasps, feedback.

Each experiment writes CSV artifacts plus a manifest.json that embeds enough
to regenerate every artifact byte-for-byte (the replay contract).
"""

from __future__ import annotations

from pathlib import Path

from scipy.spatial import ConvexHull

from .finger import (
    FingerConfig,
    FingerType,
    JointState,
    TendonCommand,
    step_finger,
    workspace_sample,
)
from .hand import FINGER_NAMES, Circle, ConvexPolygon, HandConfig, ObjectShape, init_hand, step_hand
from .scenario import Disturbance, Scenario
from .simulate import Session
from .tactile import write_pgm
from .telemetry import write_analysis, write_manifest, write_telemetry

EXPERIMENTS = ("A1", "workspace", "B1", "C", "D1", "D2", "D3")

_NUM = lambda x: repr(float(x))


# -- motor-input profiles (encoder setpoints over time) -----------------------
# Shapes approximate the published single-finger drive plots: profiles 1 and 2
# hold the antagonist at its reference (pure differential drive), profile 3
# closes and reopens both motors together.

def _ramp(t, t0, t1, v0, v1):
    if t <= t0:
        return v0
    if t >= t1:
        return v1
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


def profile_encoders(profile: int, t: float) -> tuple[float, float]:
    if profile == 1:
        ago = _ramp(t, 1.0, 3.0, 700.0, 550.0) if t < 4.0 else _ramp(t, 4.0, 6.0, 550.0, 700.0)
        return ago, 820.0
    if profile == 2:
        if t < 2.5:
            ago = _ramp(t, 1.0, 2.0, 700.0, 620.0)
        elif t < 5.0:
            ago = _ramp(t, 2.5, 4.5, 620.0, 450.0)
        else:
            ago = _ramp(t, 5.0, 7.0, 450.0, 700.0)
        return ago, 820.0
    if profile == 3:
        ago = _ramp(t, 1.0, 4.0, 700.0, 200.0) if t < 4.5 else _ramp(t, 4.5, 7.0, 200.0, 700.0)
        ant = _ramp(t, 1.0, 4.0, 820.0, 220.0) if t < 4.5 else _ramp(t, 4.5, 7.0, 220.0, 820.0)
        return ago, ant
    raise ValueError(f"unknown profile {profile}")


def run_a1(out_dir: Path, seed: int) -> dict:
    """Single-finger joint traces for three drive profiles x three types."""
    hand = HandConfig()
    duration, rate = 8.0, 50.0
    artifacts = []
    summaries = {}
    for variant in ("A", "D", "P"):
        cfg = FingerConfig(finger_type=FingerType(variant))
        for profile in (1, 2, 3):
            rows = ["time,agonist_encoder,antagonist_encoder,mcp,pip,dip"]
            state = JointState()
            max_motion = 0.0
            for k in range(int(duration * rate)):
                t = k / rate
                ago, ant = profile_encoders(profile, t)
                pull = hand.spool_gain * (hand.agonist_reference - ago)
                slack = hand.spool_gain * (hand.antagonist_reference - ant)
                state = step_finger(cfg, state, TendonCommand(max(pull, 0.0), max(slack, 0.0)))
                max_motion = max(max_motion, state.total)
                rows.append(
                    f"{_NUM(t)},{_NUM(ago)},{_NUM(ant)},"
                    f"{_NUM(state.theta_m)},{_NUM(state.theta_p)},{_NUM(state.theta_d)}"
                )
            name = f"a1_{variant}_profile{profile}.csv"
            (out_dir / name).write_text("\n".join(rows) + "\n")
            artifacts.append(name)
            summaries[f"{variant}_profile{profile}"] = {
                "max_total_rotation_rad": max_motion,
                "inapplicable": bool(max_motion < 1e-9),
            }
    write_manifest(
        out_dir / "manifest.json",
        "A1",
        {"seed": seed, "profiles": "approximate reconstructions of the published drive plots"},
        artifacts,
        extra={"summaries": summaries},
    )
    return {"artifacts": artifacts, "summaries": summaries}


def run_workspace(out_dir: Path, seed: int, n: int = 10000) -> dict:
    """Monte Carlo fingertip clouds and hull areas per finger type."""
    artifacts = []
    hulls = {}
    for variant in ("A", "D", "P"):
        cfg = FingerConfig(finger_type=FingerType(variant))
        pts = workspace_sample(cfg, n, seed=seed)
        name = f"workspace_{variant}.csv"
        rows = ["x,y"] + [f"{_NUM(x)},{_NUM(y)}" for x, y in pts]
        (out_dir / name).write_text("\n".join(rows) + "\n")
        artifacts.append(name)
        hulls[variant] = float(ConvexHull(pts).volume)
    write_manifest(
        out_dir / "manifest.json",
        "workspace",
        {"seed": seed, "n": n},
        artifacts,
        extra={"hull_areas": hulls},
    )
    return {"artifacts": artifacts, "hull_areas": hulls}


def run_b1(out_dir: Path, seed: int) -> dict:
    """Whole-hand joint traces under the three motor-input profiles."""
    hand = HandConfig()
    duration, rate = 8.0, 50.0
    dt = 1.0 / rate
    artifacts = []
    header = "time,agonist_encoder,antagonist_encoder," + ",".join(
        f"{n}_{j}" for n in FINGER_NAMES for j in ("mcp", "pip", "dip")
    )
    for profile in (1, 2, 3):
        state = init_hand(hand)
        rows = [header]
        for k in range(int(duration * rate)):
            t = k / rate
            setpoints = profile_encoders(profile, t)
            state, _ = step_hand(hand, state, setpoints, None, dt)
            joints = ",".join(_NUM(a) for f in state.fingers for a in f.angles)
            rows.append(
                f"{_NUM(state.time)},{_NUM(state.agonist_encoder)},"
                f"{_NUM(state.antagonist_encoder)},{joints}"
            )
        name = f"b1_profile{profile}.csv"
        (out_dir / name).write_text("\n".join(rows) + "\n")
        artifacts.append(name)
    write_manifest(out_dir / "manifest.json", "B1", {"seed": seed}, artifacts)
    return {"artifacts": artifacts}


# -- grasp adaptivity objects --------------------------------------------------
# Per-finger planar cross-sections standing in for the five test objects. The
# finger plane: base at the origin, +x along the extended finger, flexion
# curls toward +y.

def _uniform_object(center, radius, skin=2.0) -> ObjectShape:
    return ObjectShape(
        obstacles={name: Circle(center=center, radius=radius) for name in FINGER_NAMES},
        skin_offset=skin,
    )


def adaptivity_objects() -> dict[str, ObjectShape]:
    objects = {}
    # 76 mm cylinder: identical circular section for every finger
    objects["cylinder"] = _uniform_object((52.0, 46.0), 38.0)
    # triangular prism: identical triangular section
    tri = ConvexPolygon(vertices=((20.0, 26.0), (96.0, 26.0), (58.0, 84.0)))
    objects["prism"] = ObjectShape(
        obstacles={name: tri for name in FINGER_NAMES}, skin_offset=2.0
    )
    # pyramid: section shrinks toward the pinky (apex under the outer fingers)
    objects["pyramid"] = ObjectShape(
        obstacles={
            "thumb": Circle((52.0, 46.0), 34.0),
            "index": Circle((52.0, 46.0), 30.0),
            "middle": Circle((54.0, 48.0), 24.0),
            "ring": Circle((54.0, 50.0), 17.0),
            "pinky": Circle((52.0, 46.0), 6.0),
        },
        skin_offset=2.0,
    )
    # wine glass: bowl under thumb/index, thin stem under the others
    objects["wine_glass"] = ObjectShape(
        obstacles={
            "thumb": Circle((52.0, 46.0), 34.0),
            "index": Circle((52.0, 46.0), 34.0),
            "middle": Circle((52.0, 46.0), 6.0),
            "ring": Circle((52.0, 46.0), 6.0),
            "pinky": Circle((52.0, 46.0), 6.0),
        },
        skin_offset=2.0,
    )
    # tendon spool: flanges under thumb/index/pinky, bare axle under the rest
    objects["spool"] = ObjectShape(
        obstacles={
            "thumb": Circle((52.0, 44.0), 36.0),
            "index": Circle((52.0, 44.0), 36.0),
            "middle": Circle((50.0, 46.0), 7.0),
            "ring": Circle((50.0, 46.0), 7.0),
            "pinky": Circle((52.0, 44.0), 36.0),
        },
        skin_offset=2.0,
    )
    return objects


def grasp_scenario(objects: ObjectShape, name: str, seed: int) -> Scenario:
    # slow closure: per-tick fingertip travel stays inside the skin shell
    return Scenario(
        name=name,
        control_mode="open_loop",
        objects=objects,
        gesture_trace=((0.0, 180.0), (0.5, 180.0), (8.5, 40.0), (10.0, 40.0)),
        duration=10.0,
        seed=seed,
    )


def run_c(out_dir: Path, seed: int) -> dict:
    """Contact-count adaptivity across the five object scenarios."""
    artifacts = []
    runs = []
    counts = {}
    for obj_name, objects in adaptivity_objects().items():
        scenario = grasp_scenario(objects, f"c_{obj_name}", seed)
        session = Session(scenario)
        records = session.run()
        name = f"c_{obj_name}.csv"
        write_telemetry(out_dir / name, records)
        artifacts.append(name)
        runs.append({"artifact": name, "scenario": scenario.to_dict()})
        counts[obj_name] = records[-1].fingertip_contact_count
    write_manifest(
        out_dir / "manifest.json",
        "C",
        {"seed": seed},
        artifacts,
        extra={"runs": runs, "contact_counts": counts},
    )
    return {"artifacts": artifacts, "contact_counts": counts}


# -- tactile feedback scenarios -------------------------------------------------

def d1_scenario(seed: int = 0) -> Scenario:
    objects = ObjectShape(
        obstacles={"index": Circle(center=(70.0, 60.0), radius=6.0)}, skin_offset=2.0
    )
    return Scenario(
        name="d1_deformation_servo",
        control_mode="servo",
        objects=objects,
        gesture_trace=None,
        disturbances=(
            Disturbance(time=3.0, kind="indenter_move", magnitude=0.8, finger="index"),
            Disturbance(time=5.0, kind="indenter_move", magnitude=-1.2, finger="index"),
            Disturbance(time=7.0, kind="indenter_move", magnitude=0.8, finger="index"),
        ),
        duration=10.0,
        seed=seed,
    )


# Grasp target for the feedback demos: a handle-sized section deep in the
# curl pocket, reached mid-pad by the distal phalanges with the DIP unblocked.
_GRASP_TARGET = dict(center=(80.0, 62.0), radius=12.0)


def _feedback_object() -> ObjectShape:
    return ObjectShape(
        obstacles={
            name: Circle(_GRASP_TARGET["center"], _GRASP_TARGET["radius"])
            for name in FINGER_NAMES
        },
        skin_offset=2.0,
        block_penetration=6.0,
    )


def d2_scenario(seed: int = 0) -> Scenario:
    return Scenario(
        name="d2_reactive_teleoperation",
        control_mode="fsm",
        objects=_feedback_object(),
        gesture_trace=(
            (0.0, 180.0),
            (1.0, 180.0),
            (6.0, 95.0),   # close onto the object (contact freezes the grasp)
            (8.0, 95.0),
            (9.0, 110.0),  # operator wiggles; grasp must hold
            (10.0, 85.0),
            (11.0, 100.0),
            (20.0, 100.0),
        ),
        disturbances=(
            # probe dragged across the thumb pad, toward the grid interior
            Disturbance(time=13.0, kind="induced_slip", magnitude=-150.0, duration=0.3, finger="thumb"),
        ),
        duration=18.0,
        seed=seed,
    )


def d3_scenario(seed: int = 0) -> Scenario:
    return Scenario(
        name="d3_disturbance_rejection",
        control_mode="fsm",
        objects=_feedback_object(),
        gesture_trace=((0.0, 180.0), (1.0, 180.0), (10.0, 95.0), (22.0, 95.0)),
        disturbances=(
            # shove the object out along the fingertip pad
            Disturbance(
                time=12.0, kind="object_force", magnitude=48.0, duration=2.5,
                finger="index", direction=(0.739, 0.673),
            ),
        ),
        duration=19.0,
        seed=seed,
        hold_penetration=4.5,
    )


def _session_artifacts(prefix: str, session: Session, records, out_dir: Path) -> list[str]:
    """Telemetry, per-frame tactile analysis, and end-state pad frames."""
    artifacts = [f"{prefix}.csv"]
    write_telemetry(out_dir / artifacts[0], records)
    analysis = f"{prefix}_tactile.csv"
    write_analysis(out_dir / analysis, session.analysis_rows)
    artifacts.append(analysis)
    for name, sensor in session.sensors.items():
        ind = sensor.reading.indentation
        if ind is not None and ind.depth > 0.0:
            frame_name = f"{prefix}_{name}.pgm"
            write_pgm(out_dir / frame_name, sensor.current_frame(ind))
            artifacts.append(frame_name)
    return artifacts


def _run_session_experiment(name: str, scenario: Scenario, out_dir: Path) -> dict:
    session = Session(scenario)
    records = session.run()
    artifacts = _session_artifacts(name.lower(), session, records, out_dir)
    write_manifest(
        out_dir / "manifest.json",
        name,
        scenario.to_dict(),
        artifacts,
        extra={"runs": [{"artifact": artifacts[0], "scenario": scenario.to_dict()}]},
    )
    return {"artifacts": artifacts}


def run_d3(out_dir: Path, scenario: Scenario) -> dict:
    """The same disturbance twice: gesture-only hold versus tactile feedback."""
    artifacts = []
    runs = []
    outcomes = {}
    for label, mode in (("feedback", "fsm"), ("no_feedback", "open_loop")):
        variant = Scenario.from_dict({**scenario.to_dict(), "control_mode": mode,
                                      "name": f"{scenario.name}_{label}"})
        session = Session(variant)
        records = session.run()
        new = _session_artifacts(f"d3_{label}", session, records, out_dir)
        artifacts.extend(new)
        runs.append({"artifact": new[0], "scenario": variant.to_dict()})
        outcomes[label] = {
            "final_contact_count": records[-1].fingertip_contact_count,
            "min_contact_count_after_disturbance": min(
                r.fingertip_contact_count
                for r in records
                if r.time >= scenario.disturbances[0].time
            ),
        }
    write_manifest(
        out_dir / "manifest.json",
        "D3",
        scenario.to_dict(),
        artifacts,
        extra={"runs": runs, "outcomes": outcomes},
    )
    return {"artifacts": artifacts, "outcomes": outcomes}


def default_scenario(name: str, seed: int = 0) -> Scenario | None:
    if name == "D1":
        return d1_scenario(seed)
    if name == "D2":
        return d2_scenario(seed)
    if name == "D3":
        return d3_scenario(seed)
    return None


def run_experiment(name: str, scenario: Scenario | None, out_dir, seed: int | None = None) -> dict:
    """Dispatch one named experiment into out_dir; returns artifact info."""
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if scenario is not None and seed is not None and scenario.seed != seed:
        scenario = Scenario.from_dict({**scenario.to_dict(), "seed": seed})
    run_seed = seed if seed is not None else (scenario.seed if scenario else 0)
    if name == "A1":
        return run_a1(out, run_seed)
    if name == "workspace":
        return run_workspace(out, run_seed)
    if name == "B1":
        return run_b1(out, run_seed)
    if name == "C":
        return run_c(out, run_seed)
    if name == "D3":
        return run_d3(out, scenario or d3_scenario(run_seed))
    scenario = scenario or default_scenario(name, run_seed)
    if scenario is None:
        raise ValueError(f"experiment {name} needs a scenario")
    return _run_session_experiment(name, scenario, out)
