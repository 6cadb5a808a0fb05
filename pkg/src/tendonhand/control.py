"""Grasp control: gesture-to-setpoint map, PID, contact/slip state machine.

Open-loop teleoperation maps an average hand-closure angle onto the two motor
setpoints. On fingertip contact the machine freezes the grasp; on slip it
ratchets the agonist/antagonist differential to curl the distal joints in;
opening the human hand wide releases everything back to gesture tracking.
A separate deformation servo holds the tactile deformation proxy at a target
by nudging both setpoints together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

OPEN_SETPOINTS = (700.0, 820.0)
CLOSED_SETPOINTS = (200.0, 220.0)
RELEASE_ANGLE = 170.0  # deg; wider than this drops back to gesture sync
DIP_SATURATION_DIFFERENTIAL = 500.0  # counts; antagonist minus agonist ceiling


class ControlMode(str, Enum):
    SYNC = "SYNC"
    CONTACT_HOLD = "CONTACT_HOLD"
    SLIP_COMP = "SLIP_COMP"


@dataclass(frozen=True)
class GestureInput:
    """Mean finger-to-palm angle of the operator's hand, degrees. 180 = open."""

    avg_closure_angle: float = 180.0


@dataclass(frozen=True)
class MotorSetpoints:
    agonist: float = OPEN_SETPOINTS[0]
    antagonist: float = OPEN_SETPOINTS[1]

    @property
    def differential(self) -> float:
        return self.antagonist - self.agonist

    def as_tuple(self) -> tuple[float, float]:
        return (self.agonist, self.antagonist)


@dataclass(frozen=True)
class PidGains:
    kp: float = 4.0
    ki: float = 1.0
    kd: float = 0.0
    integral_clamp: float = 200.0
    output_clamp: float = math.inf


@dataclass
class PidState:
    integral: float = 0.0
    previous_error: float = 0.0


def pid_step(gains: PidGains, setpoint: float, measured: float, dt: float, state: PidState) -> float:
    """One clamped-integral PID update; returns the command."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    error = setpoint - measured
    state.integral = min(
        max(state.integral + error * dt, -gains.integral_clamp), gains.integral_clamp
    )
    derivative = (error - state.previous_error) / dt
    state.previous_error = error
    command = gains.kp * error + gains.ki * state.integral + gains.kd * derivative
    return min(max(command, -gains.output_clamp), gains.output_clamp)


@dataclass(frozen=True)
class ControllerConfig:
    closed_angle: float = 30.0  # deg of the operator hand at full fist
    release_angle: float = RELEASE_ANGLE
    open_setpoints: tuple[float, float] = OPEN_SETPOINTS
    closed_setpoints: tuple[float, float] = CLOSED_SETPOINTS
    dip_step: float = 10.0  # counts of extra differential per slip tick
    dip_saturation: float = DIP_SATURATION_DIFFERENTIAL
    slip_clear_ticks: int = 5
    deformation_target: float = 0.05
    servo_gains: PidGains = PidGains(kp=130.0, ki=130.0, kd=0.0, integral_clamp=1.0)

    def to_dict(self) -> dict:
        return {
            "closed_angle": self.closed_angle,
            "release_angle": self.release_angle,
            "open_setpoints": list(self.open_setpoints),
            "closed_setpoints": list(self.closed_setpoints),
            "dip_step": self.dip_step,
            "dip_saturation": self.dip_saturation,
            "slip_clear_ticks": self.slip_clear_ticks,
            "deformation_target": self.deformation_target,
            "servo_gains": {
                "kp": self.servo_gains.kp,
                "ki": self.servo_gains.ki,
                "kd": self.servo_gains.kd,
                "integral_clamp": self.servo_gains.integral_clamp,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ControllerConfig":
        kwargs = {k: d[k] for k in (
            "closed_angle", "release_angle", "dip_step", "dip_saturation",
            "slip_clear_ticks", "deformation_target",
        ) if k in d}
        if "open_setpoints" in d:
            kwargs["open_setpoints"] = tuple(d["open_setpoints"])
        if "closed_setpoints" in d:
            kwargs["closed_setpoints"] = tuple(d["closed_setpoints"])
        if "servo_gains" in d:
            kwargs["servo_gains"] = PidGains(**d["servo_gains"])
        return cls(**kwargs)


@dataclass(frozen=True)
class ControllerState:
    mode: ControlMode = ControlMode.SYNC
    setpoints: MotorSetpoints = MotorSetpoints()
    slip_clear_count: int = 0


def map_gesture(g: GestureInput, config: ControllerConfig = ControllerConfig()) -> MotorSetpoints:
    """Linear interpolation per motor between the fully-closed and open poses."""
    angle = min(max(g.avg_closure_angle, config.closed_angle), 180.0)
    t = (angle - config.closed_angle) / (180.0 - config.closed_angle)
    ago = config.closed_setpoints[0] + t * (config.open_setpoints[0] - config.closed_setpoints[0])
    ant = config.closed_setpoints[1] + t * (config.open_setpoints[1] - config.closed_setpoints[1])
    return MotorSetpoints(agonist=ago, antagonist=ant)


def dip_compensation(
    sp: MotorSetpoints, step: float, saturation: float = DIP_SATURATION_DIFFERENTIAL
) -> MotorSetpoints:
    """Pull the agonist down against a held antagonist to curl the distal joints.

    The agonist floors where the differential hits the saturation reading, so
    repeated application ratchets toward (antagonist - saturation) and never
    opens the hand.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    floor = max(sp.antagonist - saturation, 0.0)
    agonist = max(sp.agonist - step, floor)
    agonist = min(agonist, sp.agonist)  # never widen
    return MotorSetpoints(agonist=agonist, antagonist=sp.antagonist)


def fsm_step(
    state: ControllerState,
    is_contact: bool,
    is_slip: bool,
    g: GestureInput,
    config: ControllerConfig = ControllerConfig(),
) -> tuple[ControllerState, MotorSetpoints]:
    """Advance the grasp state machine one tick.

    SYNC tracks the gesture; contact freezes the setpoints (CONTACT_HOLD);
    slip enters SLIP_COMP, which widens the motor differential every slip
    tick and falls back to CONTACT_HOLD after slip_clear_ticks clean ticks.
    Opening past the release angle forces SYNC from any mode.
    """
    if g.avg_closure_angle > config.release_angle:
        sp = map_gesture(g, config)
        return ControllerState(mode=ControlMode.SYNC, setpoints=sp), sp

    if state.mode is ControlMode.SYNC:
        if is_contact:
            held = state.setpoints
            new = ControllerState(mode=ControlMode.CONTACT_HOLD, setpoints=held)
            if is_slip:
                return fsm_step(new, is_contact, is_slip, g, config)
            return new, held
        sp = map_gesture(g, config)
        return ControllerState(mode=ControlMode.SYNC, setpoints=sp), sp

    if state.mode is ControlMode.CONTACT_HOLD:
        if is_slip:
            sp = dip_compensation(state.setpoints, config.dip_step, config.dip_saturation)
            return ControllerState(mode=ControlMode.SLIP_COMP, setpoints=sp), sp
        return state, state.setpoints

    # SLIP_COMP
    if is_slip:
        sp = dip_compensation(state.setpoints, config.dip_step, config.dip_saturation)
        return ControllerState(mode=ControlMode.SLIP_COMP, setpoints=sp), sp
    cleared = state.slip_clear_count + 1
    if cleared >= config.slip_clear_ticks:
        return (
            ControllerState(mode=ControlMode.CONTACT_HOLD, setpoints=state.setpoints),
            state.setpoints,
        )
    return (
        ControllerState(
            mode=ControlMode.SLIP_COMP, setpoints=state.setpoints, slip_clear_count=cleared
        ),
        state.setpoints,
    )


@dataclass
class DeformationServo:
    """PI servo holding the tactile deformation proxy at its target.

    Positive error (pressed harder than the target) opens both motors
    together; the finger backs off without changing the differential.
    """

    config: ControllerConfig = field(default_factory=ControllerConfig)
    pid: PidState = field(default_factory=PidState)

    def step(self, measured_d: float, dt: float) -> tuple[float, float]:
        if not 0.0 <= measured_d <= 1.0:
            raise ValueError("deformation must lie in [0, 1]")
        command = pid_step(
            self.config.servo_gains,
            measured_d,
            self.config.deformation_target,
            dt,
            self.pid,
        )
        return (command, command)


def deformation_servo(
    target: float, measured_d: float, gains: PidGains, dt: float, state: PidState
) -> tuple[float, float]:
    """Functional form of the deformation servo: synchronized increments."""
    if not 0.0 <= measured_d <= 1.0:
        raise ValueError("deformation must lie in [0, 1]")
    command = pid_step(gains, measured_d, target, dt, state)
    return (command, command)
