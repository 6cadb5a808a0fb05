"""Five-finger hand: two motors, two spring differentials, planar contact.

The hand couples one agonist (closing) and one antagonist (opening) motor to
all five fingers through per-finger series springs. Encoders are tracked
toward setpoints under a rate limit, spool displacement is split across the
fingers, and each finger is resolved quasi-statically with the joints its
obstacle currently blocks. Contact happens in each finger's own sagittal
plane against a per-finger obstacle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .finger import (
    JOINT_NAMES,
    FingerConfig,
    JointState,
    TendonCommand,
    agonist_length,
    antagonist_length,
    joint_positions,
    step_finger,
)

FINGER_NAMES = ("thumb", "index", "middle", "ring", "pinky")

# Table-calibrated defaults: full 600-count stroke closes in 0.46 s and opens
# in 0.59 s.
CLOSE_RATE = 600.0 / 0.46
OPEN_RATE = 600.0 / 0.59


@dataclass(frozen=True)
class Placement:
    """Planar pose of a finger base in the hand frame (mm, rad)."""

    x: float = 0.0
    y: float = 0.0
    angle: float = 0.0

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "angle": self.angle}

    @classmethod
    def from_dict(cls, d: dict) -> "Placement":
        return cls(d.get("x", 0.0), d.get("y", 0.0), d.get("angle", 0.0))


def default_placements() -> tuple[Placement, ...]:
    # thumb opposed below the four fingers, all pointing +x
    return (
        Placement(0.0, -55.0, 0.0),
        Placement(0.0, 0.0, 0.0),
        Placement(0.0, 25.0, 0.0),
        Placement(0.0, 50.0, 0.0),
        Placement(0.0, 75.0, 0.0),
    )


@dataclass(frozen=True)
class HandConfig:
    """Two-motor, five-finger assembly parameters.

    15 degrees of freedom (5 fingers x 3 joints), 2 degrees of actuation.
    Encoder references are the fully-open readings; pulling below them takes
    tendon in at spool_gain mm per count.
    """

    fingers: tuple[FingerConfig, ...] = tuple(FingerConfig() for _ in range(5))
    placements: tuple[Placement, ...] = field(default_factory=default_placements)
    synergy_stiffness: float = 0.5  # N/mm, series spring of each finger tendon
    encoder_range: tuple[float, float] = (0.0, 1023.0)
    spool_gain: float = 0.1  # mm of tendon per encoder count
    agonist_reference: float = 700.0
    antagonist_reference: float = 820.0
    motor_rate: float = CLOSE_RATE  # counts/s toward closing (decreasing encoder)
    motor_rate_open: float = OPEN_RATE  # counts/s toward opening

    def __post_init__(self) -> None:
        if len(self.fingers) != 5 or len(self.placements) != 5:
            raise ValueError("hand needs exactly five fingers and placements")
        if self.spool_gain <= 0 or self.motor_rate <= 0 or self.motor_rate_open <= 0:
            raise ValueError("gains and rates must be positive")
        lo, hi = self.encoder_range
        if not lo < hi:
            raise ValueError("encoder_range must be ordered")
        for ref in (self.agonist_reference, self.antagonist_reference):
            if not lo <= ref <= hi:
                raise ValueError("references must sit inside encoder_range")

    @property
    def dof(self) -> int:
        return 15

    def clamp_encoder(self, value: float) -> float:
        lo, hi = self.encoder_range
        return min(max(value, lo), hi)

    def to_dict(self) -> dict:
        return {
            "fingers": [f.to_dict() for f in self.fingers],
            "placements": [p.to_dict() for p in self.placements],
            "synergy_stiffness": self.synergy_stiffness,
            "encoder_range": list(self.encoder_range),
            "spool_gain": self.spool_gain,
            "agonist_reference": self.agonist_reference,
            "antagonist_reference": self.antagonist_reference,
            "motor_rate": self.motor_rate,
            "motor_rate_open": self.motor_rate_open,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HandConfig":
        kwargs = {}
        if "fingers" in d:
            kwargs["fingers"] = tuple(FingerConfig.from_dict(f) for f in d["fingers"])
        if "placements" in d:
            kwargs["placements"] = tuple(Placement.from_dict(p) for p in d["placements"])
        for key in (
            "synergy_stiffness",
            "spool_gain",
            "agonist_reference",
            "antagonist_reference",
            "motor_rate",
            "motor_rate_open",
        ):
            if key in d:
                kwargs[key] = d[key]
        if "encoder_range" in d:
            kwargs["encoder_range"] = tuple(d["encoder_range"])
        return cls(**kwargs)


@dataclass(frozen=True)
class DifferentialState:
    """One tendon system's split of spool travel across the five fingers.

    spool = displacement[i] + extension[i] holds exactly for every finger:
    whatever the finger cannot take up parks in its series spring.
    """

    spool: float
    displacement: tuple[float, ...]
    extension: tuple[float, ...]


def encoders_to_spool(encoder: float, reference: float, config: HandConfig) -> float:
    """Tendon taken in by the spool for an encoder reading, mm.

    Decreasing encoder pulls tendon in; readings above the reference clamp
    to zero displacement.
    """
    lo, hi = config.encoder_range
    if not lo <= encoder <= hi:
        raise ValueError(f"encoder {encoder} outside range [{lo}, {hi}]")
    return max(config.spool_gain * (reference - encoder), 0.0)


def spool_to_encoder(spool: float, reference: float, config: HandConfig) -> float:
    """Inverse of encoders_to_spool on the pulling side."""
    return reference - spool / config.spool_gain


def distribute(spool: float, advance_limits: tuple[float, ...]) -> DifferentialState:
    """Split one spool displacement across fingers behind series springs.

    Each finger's tendon advances up to its own limit; the shortfall becomes
    spring extension, so blocked fingers never slow the others.
    """
    if spool < 0:
        raise ValueError("spool displacement must be >= 0")
    disp = tuple(min(spool, lim) for lim in advance_limits)
    ext = tuple(spool - d for d in disp)
    return DifferentialState(spool=spool, displacement=disp, extension=ext)


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def to_dict(self) -> dict:
        return {"kind": "circle", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.vertices) < 3:
            raise ValueError("polygon needs at least three vertices")
        if not _is_convex(self.vertices):
            raise ValueError("polygon must be convex")

    def to_dict(self) -> dict:
        return {"kind": "polygon", "vertices": [list(v) for v in self.vertices]}


Obstacle = Circle | ConvexPolygon


def obstacle_from_dict(d: dict) -> Obstacle:
    if d["kind"] == "circle":
        return Circle(tuple(d["center"]), d["radius"])
    if d["kind"] == "polygon":
        return ConvexPolygon(tuple(tuple(v) for v in d["vertices"]))
    raise ValueError(f"unknown obstacle kind {d['kind']!r}")


@dataclass(frozen=True)
class ObjectShape:
    """Per-finger planar obstacles plus the skin-contact model.

    Contact (and the tactile stimulus) starts when a phalanx comes within
    skin_offset of the obstacle; joints jam once the skin is fully compressed
    (penetration reaches block_penetration).
    """

    obstacles: dict[str, Obstacle | None] = field(default_factory=dict)
    skin_offset: float = 2.0
    block_penetration: float = 4.0

    def for_finger(self, name: str) -> Obstacle | None:
        return self.obstacles.get(name)

    def to_dict(self) -> dict:
        return {
            "obstacles": {
                k: (v.to_dict() if v is not None else None) for k, v in self.obstacles.items()
            },
            "skin_offset": self.skin_offset,
            "block_penetration": self.block_penetration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectShape":
        return cls(
            obstacles={
                k: (obstacle_from_dict(v) if v is not None else None)
                for k, v in d.get("obstacles", {}).items()
            },
            skin_offset=d.get("skin_offset", 2.0),
            block_penetration=d.get("block_penetration", 4.0),
        )


@dataclass(frozen=True)
class FingerContact:
    blocked: frozenset[str] = frozenset()
    contact_point: tuple[float, float] | None = None
    penetration: float = 0.0
    fingertip_contact: bool = False
    # distal-phalanx specifics feeding the fingertip sensor
    distal_penetration: float = 0.0
    distal_along: float = 0.5  # 0 at the DIP joint, 1 at the tip


@dataclass(frozen=True)
class ContactReport:
    fingers: tuple[FingerContact, ...] = tuple(FingerContact() for _ in range(5))

    @property
    def fingertip_contact_count(self) -> int:
        return sum(1 for f in self.fingers if f.fingertip_contact)


def count_fingertip_contacts(report: ContactReport) -> int:
    """Fingers whose distal phalanx touches, the paper-facing contact metric."""
    return report.fingertip_contact_count


def _is_convex(vertices) -> bool:
    n = len(vertices)
    sign = 0.0
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        cx, cy = vertices[(i + 2) % n]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if abs(cross) < 1e-12:
            continue
        if sign == 0.0:
            sign = math.copysign(1.0, cross)
        elif math.copysign(1.0, cross) != sign:
            return False
    return True


def _point_segment_distance(p, a, b) -> tuple[float, tuple[float, float]]:
    """Distance from point p to segment ab and the closest segment point."""
    ax, ay = a
    bx, by = b
    px, py = p
    vx, vy = bx - ax, by - ay
    vv = vx * vx + vy * vy
    if vv == 0.0:
        t = 0.0
    else:
        t = min(max(((px - ax) * vx + (py - ay) * vy) / vv, 0.0), 1.0)
    qx, qy = ax + t * vx, ay + t * vy
    return math.hypot(px - qx, py - qy), (qx, qy)


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def _point_in_convex(p, vertices) -> bool:
    sign = 0.0
    n = len(vertices)
    for i in range(n):
        a = vertices[i]
        b = vertices[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if abs(cross) < 1e-12:
            continue
        if sign == 0.0:
            sign = math.copysign(1.0, cross)
        elif math.copysign(1.0, cross) != sign:
            return False
    return True


def _segment_clearance(a, b, obstacle: Obstacle) -> tuple[float, tuple[float, float]]:
    """Signed clearance from segment ab to the obstacle surface, mm.

    Negative means interpenetration. Also returns the deepest segment point.
    """
    if isinstance(obstacle, Circle):
        dist, closest = _point_segment_distance(obstacle.center, a, b)
        return dist - obstacle.radius, closest
    # convex polygon: sample the segment; exact enough for blocking decisions
    # and deterministic
    ts = np.linspace(0.0, 1.0, 33)
    best = (math.inf, a)
    verts = obstacle.vertices
    n = len(verts)
    for t in ts:
        p = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        edge_d = min(
            _point_segment_distance(p, verts[i], verts[(i + 1) % n])[0] for i in range(n)
        )
        d = -edge_d if _point_in_convex(p, verts) else edge_d
        if d < best[0]:
            best = (d, p)
    return best


def contact_detect(
    config: FingerConfig,
    joints: JointState,
    obstacle: Obstacle | None,
    skin_offset: float = 2.0,
    block_penetration: float = 4.0,
) -> FingerContact:
    """Per-finger contact against its planar obstacle.

    Contact starts when a phalanx is within skin_offset of the surface. A
    joint jams (cannot flex further) once any segment distal to it has fully
    compressed the skin: rotating any joint proximal to a hard contact would
    drive that contact deeper. Joints distal to the contact stay free, which
    is what lets the chain wrap around the object.
    """
    if obstacle is None:
        return FingerContact()
    pts = joint_positions(config, joints)
    touching = False
    deepest = -math.inf
    deepest_point = None
    fingertip = False
    distal_pen = 0.0
    distal_along = 0.5
    hard_until = -1  # highest segment index in hard contact
    for i, joint in enumerate(JOINT_NAMES):
        a, b = tuple(pts[i]), tuple(pts[i + 1])
        clearance, point = _segment_clearance(a, b, obstacle)
        pen = skin_offset - clearance
        if joint == "dip" and pen >= 0.0:
            fingertip = True
            distal_pen = max(pen, 0.0)
            seg = (b[0] - a[0], b[1] - a[1])
            seg_len2 = seg[0] * seg[0] + seg[1] * seg[1]
            if seg_len2 > 0.0:
                t = ((point[0] - a[0]) * seg[0] + (point[1] - a[1]) * seg[1]) / seg_len2
                distal_along = min(max(t, 0.0), 1.0)
        if pen >= 0.0:
            touching = True
            if pen > deepest:
                deepest = pen
                deepest_point = point
            if pen >= block_penetration:
                hard_until = i
    if not touching:
        return FingerContact()
    blocked = frozenset(JOINT_NAMES[: hard_until + 1])
    return FingerContact(
        blocked=blocked,
        contact_point=deepest_point,
        penetration=max(deepest, 0.0),
        fingertip_contact=fingertip,
        distal_penetration=distal_pen,
        distal_along=distal_along,
    )


@dataclass(frozen=True)
class HandState:
    """Snapshot of the hand: immutable, advanced by step_hand."""

    fingers: tuple[JointState, ...] = tuple(JointState() for _ in range(5))
    agonist_encoder: float = 700.0
    antagonist_encoder: float = 820.0
    diff_agonist: DifferentialState = DifferentialState(0.0, (0.0,) * 5, (0.0,) * 5)
    diff_antagonist: DifferentialState = DifferentialState(0.0, (0.0,) * 5, (0.0,) * 5)
    blocked: tuple[frozenset[str], ...] = (frozenset(),) * 5
    tick: int = 0
    time: float = 0.0


def init_hand(config: HandConfig) -> HandState:
    rest = tuple(
        step_finger(fc, JointState(), TendonCommand(0.0, 0.0)) for fc in config.fingers
    )
    return HandState(
        fingers=rest,
        agonist_encoder=config.agonist_reference,
        antagonist_encoder=config.antagonist_reference,
    )


def _track(current: float, target: float, config: HandConfig, dt: float) -> float:
    delta = target - current
    rate = config.motor_rate if delta < 0 else config.motor_rate_open
    step = min(abs(delta), rate * dt)
    return current + math.copysign(step, delta) if delta else current


# Contact is re-evaluated whenever the encoders have moved this far, so a
# fast sweep cannot carry a phalanx through an obstacle between checks.
CONTACT_SUBSTEP_COUNTS = 4.0


def step_hand(
    config: HandConfig,
    state: HandState,
    setpoints: tuple[float, float],
    objects: ObjectShape | None,
    dt: float,
) -> tuple[HandState, ContactReport]:
    """Advance one tick: track encoders, split spool travel, resolve fingers,
    refresh the contact report. Pure function of its inputs. Large encoder
    moves are internally substepped so contact blocking engages mid-sweep.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    ago_target = config.clamp_encoder(setpoints[0])
    ant_target = config.clamp_encoder(setpoints[1])
    ago_end = _track(state.agonist_encoder, ago_target, config, dt)
    ant_end = _track(state.antagonist_encoder, ant_target, config, dt)
    travel = max(abs(ago_end - state.agonist_encoder), abs(ant_end - state.antagonist_encoder))
    n_sub = max(int(math.ceil(travel / CONTACT_SUBSTEP_COUNTS)), 1) if objects else 1

    fingers = state.fingers
    blocked = state.blocked
    contacts = tuple(FingerContact() for _ in range(5))
    for k in range(1, n_sub + 1):
        frac = k / n_sub
        ago_enc = state.agonist_encoder + (ago_end - state.agonist_encoder) * frac
        ant_enc = state.antagonist_encoder + (ant_end - state.antagonist_encoder) * frac
        if k == n_sub:  # land exactly on the tracked endpoint
            ago_enc, ant_enc = ago_end, ant_end
        s_ago = encoders_to_spool(ago_enc, config.agonist_reference, config)
        s_ant = encoders_to_spool(ant_enc, config.antagonist_reference, config)
        cmd = TendonCommand(s_ago, s_ant)
        fingers = tuple(
            step_finger(fc, fingers[i], cmd, blocked[i]) for i, fc in enumerate(config.fingers)
        )
        new_contacts = []
        for i, fc in enumerate(config.fingers):
            obstacle = objects.for_finger(FINGER_NAMES[i]) if objects else None
            skin = objects.skin_offset if objects else 2.0
            block = objects.block_penetration if objects else 4.0
            new_contacts.append(contact_detect(fc, fingers[i], obstacle, skin, block))
        contacts = tuple(new_contacts)
        blocked = tuple(c.blocked for c in contacts)

    diff_ago = distribute(
        s_ago, tuple(agonist_length(fc, js) for fc, js in zip(config.fingers, fingers))
    )
    diff_ant = distribute(
        s_ant, tuple(antagonist_length(fc, js) for fc, js in zip(config.fingers, fingers))
    )
    report = ContactReport(fingers=contacts)
    new_state = HandState(
        fingers=fingers,
        agonist_encoder=ago_end,
        antagonist_encoder=ant_end,
        diff_agonist=diff_ago,
        diff_antagonist=diff_ant,
        blocked=blocked,
        tick=state.tick + 1,
        time=state.time + dt,
    )
    return new_state, report


def hand_snapshot(config: HandConfig, state: HandState, report: ContactReport | None = None) -> dict:
    """Keyed-document snapshot of the hand state (JSON-serializable)."""
    snap = {
        "tick": state.tick,
        "time": state.time,
        "agonist_encoder": state.agonist_encoder,
        "antagonist_encoder": state.antagonist_encoder,
        "joints": {
            FINGER_NAMES[i]: list(state.fingers[i].angles) for i in range(5)
        },
        "spring_extension": {
            "agonist": list(state.diff_agonist.extension),
            "antagonist": list(state.diff_antagonist.extension),
        },
    }
    if report is not None:
        snap["contacts"] = {
            FINGER_NAMES[i]: {
                "blocked": sorted(report.fingers[i].blocked),
                "penetration": report.fingers[i].penetration,
                "fingertip": report.fingers[i].fingertip_contact,
            }
            for i in range(5)
        }
        snap["fingertip_contact_count"] = report.fingertip_contact_count
    return snap
