"""Single-finger tendon kinematics and quasi-static flexion rules.

A finger is a planar three-link chain (MCP, PIP, DIP joints, proximal to
distal) driven by an agonist tendon routed over equal-radius pulleys at every
joint, opposed by an antagonist tendon whose termination point determines which
joints it spans. Commands are absolute tendon displacements from the rest
(fully extended) pose; the resolver turns a command pair into joint angles
without simulating forces. Angles in radians, lengths in millimetres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

JOINT_NAMES = ("mcp", "pip", "dip")


class FingerType(str, Enum):
    """Antagonist-tendon termination variant.

    A: runs to the fingertip, spanning every joint.
    D: stops one phalanx short, leaving the DIP to an elastic band.
    P: stops two phalanges short, leaving PIP and DIP to elastic bands.
    """

    A = "A"
    D = "D"
    P = "P"


COVERED_JOINTS = {
    FingerType.A: ("mcp", "pip", "dip"),
    FingerType.D: ("mcp", "pip"),
    FingerType.P: ("mcp",),
}


@dataclass(frozen=True)
class FingerConfig:
    """Geometry and actuation parameters of one finger.

    link_lengths sum to the overall finger length (default 115 mm split
    45/35/35). The antagonist stall torque and yield stiffness control when the
    covered-joint slack constraint gives way; defaults put that far outside
    normal operation.
    """

    link_lengths: tuple[float, float, float] = (45.0, 35.0, 35.0)
    pulley_radius: float = 5.0
    joint_limits: tuple[float, float, float] = (math.pi / 2, math.pi / 2, math.pi / 2)
    finger_type: FingerType = FingerType.D
    band_stiffness: tuple[float, float, float] = (1.0, 1.0, 1.0)  # N*mm/rad per joint, read for uncovered joints only
    stall_torque: float = 2452.0  # N*mm, antagonist motor stall (25 kg*cm class servo)
    yield_stiffness: float = 10.0  # N per mm of agonist travel pressed into a taut antagonist
    flexion_priority: tuple[str, str, str] = ("mcp", "pip", "dip")
    fill_mode: str = "synchronous"  # "synchronous": pool joints advance together; "priority": strict flexion_priority order

    def __post_init__(self) -> None:
        if len(self.link_lengths) != 3 or any(l <= 0 for l in self.link_lengths):
            raise ValueError("link_lengths must be three positive lengths")
        if self.pulley_radius <= 0:
            raise ValueError("pulley_radius must be positive")
        if any(not 0 < lim <= math.pi for lim in self.joint_limits):
            raise ValueError("joint limits must lie in (0, pi]")
        if len(self.band_stiffness) != 3 or any(k <= 0 for k in self.band_stiffness):
            raise ValueError("band_stiffness needs a positive value per joint")
        if self.stall_torque <= 0:
            raise ValueError("stall_torque must be positive")
        if sorted(self.flexion_priority) != sorted(JOINT_NAMES):
            raise ValueError("flexion_priority must be a permutation of mcp/pip/dip")
        if self.fill_mode not in ("synchronous", "priority"):
            raise ValueError("fill_mode must be 'synchronous' or 'priority'")

    @property
    def covered(self) -> tuple[str, ...]:
        return COVERED_JOINTS[self.finger_type]

    @property
    def uncovered(self) -> tuple[str, ...]:
        return tuple(j for j in JOINT_NAMES if j not in self.covered)

    def limit(self, joint: str) -> float:
        return self.joint_limits[JOINT_NAMES.index(joint)]

    def to_dict(self) -> dict:
        return {
            "link_lengths": list(self.link_lengths),
            "pulley_radius": self.pulley_radius,
            "joint_limits": list(self.joint_limits),
            "finger_type": self.finger_type.value,
            "band_stiffness": list(self.band_stiffness),
            "stall_torque": self.stall_torque,
            "yield_stiffness": self.yield_stiffness,
            "flexion_priority": list(self.flexion_priority),
            "fill_mode": self.fill_mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FingerConfig":
        return cls(
            link_lengths=tuple(d.get("link_lengths", (45.0, 35.0, 35.0))),
            pulley_radius=d.get("pulley_radius", 5.0),
            joint_limits=tuple(d.get("joint_limits", (math.pi / 2,) * 3)),
            finger_type=FingerType(d.get("finger_type", "D")),
            band_stiffness=tuple(d.get("band_stiffness", (1.0, 1.0, 1.0))),
            stall_torque=d.get("stall_torque", 2452.0),
            yield_stiffness=d.get("yield_stiffness", 10.0),
            flexion_priority=tuple(d.get("flexion_priority", JOINT_NAMES)),
            fill_mode=d.get("fill_mode", "synchronous"),
        )


@dataclass(frozen=True)
class JointState:
    """Joint angles of one finger plus the stretch stored in reset bands.

    band_energy maps each uncovered joint to its band extension in
    rad-equivalents (band extension tracks the joint angle in this model).
    """

    angles: tuple[float, float, float] = (0.0, 0.0, 0.0)
    band_energy: tuple[tuple[str, float], ...] = ()

    @property
    def theta_m(self) -> float:
        return self.angles[0]

    @property
    def theta_p(self) -> float:
        return self.angles[1]

    @property
    def theta_d(self) -> float:
        return self.angles[2]

    @property
    def total(self) -> float:
        """Whole-finger rotation: the three joint angles summed."""
        return self.angles[0] + self.angles[1] + self.angles[2]

    def angle(self, joint: str) -> float:
        return self.angles[JOINT_NAMES.index(joint)]


@dataclass(frozen=True)
class TendonCommand:
    """Absolute tendon displacements since the rest pose, both >= 0 mm.

    agonist_pull is how much agonist tendon the actuator has taken in;
    antagonist_slack is how much antagonist tendon it has paid out.
    """

    agonist_pull: float = 0.0
    antagonist_slack: float = 0.0

    def __post_init__(self) -> None:
        if self.agonist_pull < 0 or self.antagonist_slack < 0:
            raise ValueError("tendon displacements are absolute values, >= 0")


def _check_limits(config: FingerConfig, joints: JointState) -> None:
    for name, angle, lim in zip(JOINT_NAMES, joints.angles, config.joint_limits):
        if angle < -1e-12 or angle > lim + 1e-12:
            raise ValueError(f"{name} angle {angle} outside [0, {lim}]")


def joint_positions(config: FingerConfig, joints: JointState) -> np.ndarray:
    """Planar positions of the four chain points (base, PIP, DIP, tip), mm.

    Base at the origin; the fully extended finger lies along +x and flexion
    rotates +y-ward.
    """
    _check_limits(config, joints)
    pts = np.zeros((4, 2))
    angle = 0.0
    for i, (length, theta) in enumerate(zip(config.link_lengths, joints.angles)):
        angle += theta
        pts[i + 1] = pts[i] + length * np.array([math.cos(angle), math.sin(angle)])
    return pts


def forward_kinematics(config: FingerConfig, joints: JointState) -> tuple[float, float, float]:
    """Fingertip pose (x, y, phi) of the three-link chain."""
    pts = joint_positions(config, joints)
    return float(pts[3, 0]), float(pts[3, 1]), joints.total


def fingertip_jacobian(config: FingerConfig, joints: JointState) -> np.ndarray:
    """3x3 Jacobian of the fingertip pose (x, y, phi) w.r.t. the joint angles."""
    _check_limits(config, joints)
    cum = np.cumsum(joints.angles)
    jac = np.zeros((3, 3))
    for j in range(3):
        for k in range(j, 3):
            jac[0, j] -= config.link_lengths[k] * math.sin(cum[k])
            jac[1, j] += config.link_lengths[k] * math.cos(cum[k])
        jac[2, j] = 1.0
    return jac


def agonist_length(config: FingerConfig, joints: JointState) -> float:
    """Agonist tendon taken in by the current pose: r times the summed angles."""
    return config.pulley_radius * joints.total


def antagonist_length(config: FingerConfig, joints: JointState) -> float:
    """Antagonist tendon consumed: r times the angles of the joints it spans."""
    return config.pulley_radius * sum(joints.angle(j) for j in config.covered)


def _fill_priority(budget: float, names: list[str], caps: dict[str, float]) -> dict[str, float]:
    """Greedy fill: earlier joints flex as far as their cap allows."""
    out = {j: 0.0 for j in names}
    remaining = budget
    for j in names:
        take = min(remaining, caps[j])
        out[j] = take
        remaining -= take
    return out


def _fill_synchronous(
    budget: float, names: list[str], caps: dict[str, float], weights: dict[str, float]
) -> dict[str, float]:
    """Water-fill: joints advance together at rates set by their weights.

    A joint stops at its cap; the rest keep advancing until the budget is
    consumed or every joint is capped. Exact piecewise-linear solve, so equal
    budgets give bitwise-equal allocations.
    """
    out = {j: 0.0 for j in names}
    if budget <= 0.0 or not names:
        return out
    remaining = budget
    active = [j for j in names if caps[j] > 0.0]
    while active and remaining > 0.0:
        level = min(caps[j] / weights[j] for j in active)
        rate = sum(weights[j] for j in active)
        if level * rate >= remaining:
            level = remaining / rate
            for j in active:
                out[j] += weights[j] * level
            return out
        for j in active:
            out[j] += weights[j] * level
            caps[j] -= weights[j] * level
        remaining -= level * rate
        active = [j for j in active if caps[j] > 1e-15]
    return out


def step_finger(
    config: FingerConfig,
    state: JointState,
    cmd: TendonCommand,
    blocked: frozenset[str] | set[str] = frozenset(),
) -> JointState:
    """Resolve the pose reached under an absolute tendon command pair.

    The agonist budget is split into two pools: joints spanned by the
    antagonist share min(pull, slack) and the remaining joints share the
    excess of pull over slack. Within a pool, joints advance together
    (band-free joints at equal angles, band-equipped joints at rates inverse
    to their band stiffness); fill_mode="priority" instead drains each pool
    in flexion_priority order. Caps come from joint limits and from contact
    (a blocked joint cannot flex past its current angle but may extend). If
    pressing the covered joints against a taut antagonist would exceed the
    antagonist motor's stall tension, the slack constraint goes inactive and
    the covered pool sees the full pull. Saturation never raises; surplus
    command is simply not consumed.
    """
    blocked = frozenset(blocked)
    if not blocked <= set(JOINT_NAMES):
        raise ValueError(f"unknown joints in blocked set: {blocked - set(JOINT_NAMES)}")
    r = config.pulley_radius

    caps = {}
    for j in JOINT_NAMES:
        caps[j] = r * (state.angle(j) if j in blocked else config.limit(j))

    covered = [j for j in config.flexion_priority if j in config.covered]
    uncovered = [j for j in config.flexion_priority if j not in config.covered]
    cap_cov = sum(caps[j] for j in covered)
    band = {j: config.band_stiffness[JOINT_NAMES.index(j)] for j in JOINT_NAMES}

    # Stall yield: agonist travel pressed into the taut antagonist, as tension.
    want_cov = min(cmd.agonist_pull, cap_cov)
    surplus = want_cov - cmd.antagonist_slack
    slack = cmd.antagonist_slack
    if surplus > 0 and surplus * config.yield_stiffness > config.stall_torque / r:
        slack = want_cov

    budget_cov = min(cmd.agonist_pull, slack)
    budget_unc = max(cmd.agonist_pull - max(cmd.antagonist_slack, budget_cov), 0.0)

    if config.fill_mode == "priority":
        alloc = _fill_priority(budget_cov, covered, caps)
        alloc.update(_fill_priority(budget_unc, uncovered, caps))
    else:
        alloc = _fill_synchronous(budget_cov, covered, dict(caps), {j: 1.0 for j in covered})
        alloc.update(
            _fill_synchronous(
                budget_unc, uncovered, dict(caps), {j: 1.0 / band[j] for j in uncovered}
            )
        )

    angles = tuple(alloc[j] / r for j in JOINT_NAMES)
    bands = tuple((j, alloc[j] / r) for j in JOINT_NAMES if j in config.uncovered)
    return JointState(angles=angles, band_energy=bands)


def max_agonist_command(config: FingerConfig) -> float:
    """Flexor travel that would saturate every joint at its limit."""
    return config.pulley_radius * sum(config.joint_limits)


def workspace_sample(
    config: FingerConfig,
    n: int,
    seed: int,
    max_command: float | None = None,
) -> np.ndarray:
    """Fingertip positions reached from rest under n random command pairs.

    Commands are drawn uniformly from [0, max_command] for each tendon
    (default: the full-saturation agonist travel). Deterministic per seed.
    Returns an (n, 2) array of (x, y) mm.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if max_command is None:
        max_command = max_agonist_command(config)
    rng = np.random.default_rng(seed)
    cmds = rng.uniform(0.0, max_command, size=(n, 2)) if max_command > 0 else np.zeros((n, 2))
    rest = JointState()
    out = np.empty((n, 2))
    for i in range(n):
        st = step_finger(config, rest, TendonCommand(cmds[i, 0], cmds[i, 1]))
        x, y, _ = forward_kinematics(config, st)
        out[i] = (x, y)
    return out
