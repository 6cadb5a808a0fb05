"""Coupled session: hand plant, fingertip sensors, controller, disturbances.

One Session owns all mutable run state and advances it tick by tick. Sensor
frames are processed at the camera rate (below the control tick rate); between
frames the last tactile readings hold. Everything is deterministic for a
given scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import (
    ControlMode,
    ControllerState,
    GestureInput,
    MotorSetpoints,
    PidState,
    fsm_step,
    map_gesture,
    pid_step,
)
from .hand import (
    FINGER_NAMES,
    Circle,
    ContactReport,
    ConvexPolygon,
    HandState,
    ObjectShape,
    init_hand,
    step_hand,
)
from .perception import (
    Calibration,
    ContactEstimate,
    GridSpec,
    SlipState,
    contact_estimate,
    deformation,
    density_map,
    detect_markers_doh,
    detect_slip,
    force_from_deformation,
    kernel_width,
    preprocess,
)
from .scenario import Scenario
from .tactile import (
    Indentation,
    MarkerLayout,
    SensorCoupling,
    displace_markers,
    indentation_from_contact,
    render_frame,
)


@dataclass(frozen=True)
class TactileConfig:
    """Sensor geometry plus perception parameters shared by all fingertips."""

    layout: MarkerLayout = field(default_factory=MarkerLayout)
    coupling: SensorCoupling = field(default_factory=SensorCoupling)
    threshold: int = 180
    sigma_min: float = 2.0
    sigma_max: float = 6.0
    grid: GridSpec = GridSpec(x0=64.0, y0=64.0, step=2.0, nx=57, ny=57)
    contact_factor: float = 0.88
    slip_threshold: float = 3.0  # px per processed frame
    frame_rate: float = 30.0
    calibration: Calibration = Calibration()

    def frame_every(self, tick_rate: float) -> int:
        return max(int(round(tick_rate / self.frame_rate)), 1)


@dataclass
class SensorReading:
    """Latest processed tactile outputs of one fingertip."""

    slip: SlipState = field(default_factory=SlipState)
    estimate: ContactEstimate = field(default_factory=lambda: ContactEstimate(False))
    deformation: float = 0.0
    force: float = 0.0
    density: np.ndarray | None = None
    indentation: Indentation | None = None
    marker_count: int = 0


class FingertipSensor:
    """One synthetic fingertip pipeline with its frozen baseline."""

    def __init__(self, config: TactileConfig):
        self.config = config
        layout = config.layout
        self.reference_frame = render_frame(layout.positions, layout)
        binary = preprocess(self.reference_frame, threshold=config.threshold)
        detected = detect_markers_doh(binary, config.sigma_min, config.sigma_max)
        self.kernel_width = kernel_width(detected)
        self.baseline = density_map(detected.positions, self.kernel_width, config.grid)
        self.baseline_count = detected.count
        self.reading = SensorReading(marker_count=detected.count)

    def current_frame(self, indentation: Indentation | None) -> np.ndarray:
        """Render the pad image for a stimulus (the pipeline's own input)."""
        if indentation is None or indentation.depth <= 0.0:
            return self.reference_frame
        markers = displace_markers(self.config.layout, indentation)
        return render_frame(markers, self.config.layout, indentation=indentation)

    def process(self, indentation: Indentation | None) -> SensorReading:
        cfg = self.config
        if indentation is not None and indentation == self.reading.indentation:
            # static stimulus: frame unchanged, so every reading holds, and
            # zero center motion means the slip flag drops
            if self.reading.slip.is_slip:
                self.reading = SensorReading(
                    slip=detect_slip(self.reading.slip, self.reading.estimate, cfg.slip_threshold),
                    estimate=self.reading.estimate,
                    deformation=self.reading.deformation,
                    force=self.reading.force,
                    density=self.reading.density,
                    indentation=indentation,
                    marker_count=self.reading.marker_count,
                )
            return self.reading
        if indentation is None or indentation.depth <= 0.0:
            # untouched pad: frame identical to the reference by construction
            self.reading = SensorReading(
                slip=detect_slip(self.reading.slip, ContactEstimate(False), cfg.slip_threshold),
                estimate=ContactEstimate(False),
                density=self.baseline.values,
                indentation=indentation,
                marker_count=self.baseline_count,
            )
            return self.reading
        frame = self.current_frame(indentation)
        binary = preprocess(frame, threshold=cfg.threshold)
        detected = detect_markers_doh(binary, cfg.sigma_min, cfg.sigma_max)
        if detected.count == 0:
            estimate = ContactEstimate(False)
            density = self.baseline
        else:
            density = density_map(detected.positions, self.kernel_width, cfg.grid)
            estimate = contact_estimate(density, self.baseline, cfg.contact_factor)
        slip = detect_slip(self.reading.slip, estimate, cfg.slip_threshold)
        d = deformation(frame, self.reference_frame)
        self.reading = SensorReading(
            slip=slip,
            estimate=estimate,
            deformation=d,
            force=force_from_deformation(min(max(d, 0.0), 1.0), cfg.calibration),
            density=density.values,
            indentation=indentation,
            marker_count=detected.count,
        )
        return self.reading


@dataclass
class TickRecord:
    """Everything telemetry needs about one tick."""

    tick: int
    time: float
    mode: str
    agonist_encoder: float
    antagonist_encoder: float
    agonist_setpoint: float
    antagonist_setpoint: float
    joints: tuple[tuple[float, float, float], ...]  # 5 x (mcp, pip, dip)
    fingertip_contacts: tuple[bool, ...]
    fingertip_contact_count: int
    tactile_finger: str
    tactile_center: tuple[float, float] | None
    is_contact: bool
    is_slip: bool
    deformation: float
    force: float


APPROACH_RATE = 120.0  # counts/s the servo closes at before first touch


class Session:
    """Owns and advances one simulated run."""

    def __init__(self, scenario: Scenario, tactile: TactileConfig | None = None):
        self.scenario = scenario
        self.tactile_config = tactile or TactileConfig()
        self.hand_state: HandState = init_hand(scenario.hand)
        self.report: ContactReport = ContactReport()
        self.controller = ControllerState()
        self.servo_pid = PidState()
        self.servo_setpoints = MotorSetpoints()
        self.sensors = {name: FingertipSensor(self.tactile_config) for name in FINGER_NAMES}
        self.frame_every = self.tactile_config.frame_every(scenario.tick_rate)
        self.tick = 0
        self.closure_angle = 180.0
        self.feedback_enabled = scenario.control_mode != "open_loop"
        # disturbance bookkeeping
        self.object_offset = np.zeros(2)
        self.indenter_offsets = {name: np.zeros(2) for name in FINGER_NAMES}
        self.slip_bias = {name: 0.0 for name in FINGER_NAMES}
        self.extra_disturbances: list = []
        self.records: list[TickRecord] = []
        self.analysis_rows: list[dict] = []  # one per processed sensor frame

    # -- scene helpers ----------------------------------------------------

    @property
    def time(self) -> float:
        return self.tick * self.scenario.dt

    def current_objects(self) -> ObjectShape | None:
        base = self.scenario.objects
        if base is None:
            return None
        obstacles = {}
        for name, obs in base.obstacles.items():
            if obs is None:
                obstacles[name] = None
                continue
            shift = self.object_offset + self.indenter_offsets[name]
            if isinstance(obs, Circle):
                obstacles[name] = Circle(
                    center=(obs.center[0] + shift[0], obs.center[1] + shift[1]),
                    radius=obs.radius,
                )
            else:
                obstacles[name] = ConvexPolygon(
                    vertices=tuple((vx + shift[0], vy + shift[1]) for vx, vy in obs.vertices)
                )
        return ObjectShape(obstacles=obstacles, skin_offset=base.skin_offset)

    def _active(self, dist) -> bool:
        return dist.time <= self.time < dist.time + max(dist.duration, self.scenario.dt)

    def inject(
        self,
        kind: str,
        magnitude: float,
        duration: float = 0.3,
        finger: str = "index",
        direction: tuple[float, float] = (1.0, 0.0),
    ) -> None:
        """Schedule a disturbance starting at the current sim time (live use)."""
        from .scenario import Disturbance

        self.extra_disturbances.append(
            Disturbance(
                time=self.time, kind=kind, magnitude=magnitude,
                duration=duration, finger=finger, direction=direction,
            )
        )

    def _apply_disturbances(self) -> None:
        dt = self.scenario.dt
        for dist in list(self.scenario.disturbances) + self.extra_disturbances:
            if dist.kind == "indenter_move":
                # one-shot step at its scheduled tick
                if abs(dist.time - self.time) < dt / 2:
                    self._step_indenter(dist)
            elif dist.kind == "object_force" and self._active(dist):
                held = any(
                    f.distal_penetration >= self.scenario.hold_penetration
                    for f in self.report.fingers
                )
                if not held:
                    direction = np.asarray(dist.direction, dtype=float)
                    norm = np.linalg.norm(direction)
                    if norm > 0:
                        self.object_offset = self.object_offset + direction / norm * (
                            dist.magnitude * dt
                        )
            elif dist.kind == "induced_slip" and self._active(dist):
                self.slip_bias[dist.finger] += dist.magnitude * dt

    def _step_indenter(self, dist) -> None:
        """Move the finger's obstacle along the contact normal: + presses in."""
        name = dist.finger
        idx = FINGER_NAMES.index(name)
        objects = self.current_objects()
        if objects is None:
            return
        obs = objects.for_finger(name)
        if not isinstance(obs, Circle):
            return
        from .finger import joint_positions

        pts = joint_positions(self.scenario.hand.fingers[idx], self.hand_state.fingers[idx])
        a, b = pts[3 - 1], pts[3]  # distal phalanx
        fc = self.report.fingers[idx]
        if fc.fingertip_contact:
            target = a + (b - a) * fc.distal_along
        else:
            target = (a + b) / 2.0
        vec = target - np.asarray(obs.center)
        norm = np.linalg.norm(vec)
        if norm == 0:
            return
        self.indenter_offsets[name] = self.indenter_offsets[name] + vec / norm * dist.magnitude

    # -- tactile ----------------------------------------------------------

    def _sense(self) -> None:
        coupling = self.tactile_config.coupling
        for i, name in enumerate(FINGER_NAMES):
            fc = self.report.fingers[i]
            if fc.fingertip_contact and fc.distal_penetration > 0.0:
                ind = indentation_from_contact(fc.distal_penetration, fc.distal_along, coupling)
                if self.slip_bias[name]:
                    ind = Indentation(
                        center=(ind.center[0] + self.slip_bias[name], ind.center[1]),
                        depth=ind.depth,
                        radius=ind.radius,
                    )
            else:
                ind = None
            reading = self.sensors[name].process(ind)
            self.analysis_rows.append(
                {
                    "time": self.time,
                    "finger": name,
                    "marker_count": reading.marker_count,
                    "kernel_width": self.sensors[name].kernel_width,
                    "center": reading.slip.center,
                    "contact_area": reading.estimate.contact_area,
                    "is_contact": reading.slip.is_contact,
                    "is_slip": reading.slip.is_slip,
                    "deformation": reading.deformation,
                    "force": reading.force,
                }
            )

    def _aggregate_tactile(self) -> tuple[bool, bool, str]:
        """(any contact, any slip, name of the deepest-contact finger)."""
        any_contact = False
        any_slip = False
        primary = FINGER_NAMES[0]
        best = -1.0
        for name in FINGER_NAMES:
            r = self.sensors[name].reading
            if r.slip.is_contact:
                any_contact = True
            if r.slip.is_slip:
                any_slip = True
            if r.deformation > best:
                best = r.deformation
                primary = name
        return any_contact, any_slip, primary

    # -- control ----------------------------------------------------------

    def set_closure(self, angle: float) -> None:
        self.closure_angle = float(min(max(angle, 0.0), 180.0))

    def _control(self, is_contact: bool, is_slip: bool, measured_d: float) -> MotorSetpoints:
        scenario = self.scenario
        if not scenario.live and scenario.gesture_trace is not None:
            self.closure_angle = scenario.closure_angle_at(self.time)
        gesture = GestureInput(self.closure_angle)
        if scenario.control_mode == "open_loop":
            sp = map_gesture(gesture, scenario.controller)
            self.controller = ControllerState(mode=ControlMode.SYNC, setpoints=sp)
            return sp
        if scenario.control_mode == "servo":
            if not is_contact and measured_d <= 0.0 and self.servo_pid.integral == 0.0:
                sp = MotorSetpoints(
                    agonist=self.servo_setpoints.agonist - APPROACH_RATE * scenario.dt,
                    antagonist=self.servo_setpoints.antagonist - APPROACH_RATE * scenario.dt,
                )
            else:
                gains = scenario.controller.servo_gains
                rate = pid_step(
                    gains,
                    measured_d,
                    scenario.controller.deformation_target,
                    scenario.dt,
                    self.servo_pid,
                )
                sp = MotorSetpoints(
                    agonist=self.servo_setpoints.agonist + rate * scenario.dt,
                    antagonist=self.servo_setpoints.antagonist + rate * scenario.dt,
                )
            lo, hi = scenario.hand.encoder_range
            sp = MotorSetpoints(
                agonist=min(max(sp.agonist, lo), hi), antagonist=min(max(sp.antagonist, lo), hi)
            )
            self.servo_setpoints = sp
            self.controller = ControllerState(mode=self.controller.mode, setpoints=sp)
            return sp
        self.controller, sp = fsm_step(
            self.controller, is_contact, is_slip, gesture, scenario.controller
        )
        return sp

    # -- stepping ---------------------------------------------------------

    def step(self) -> TickRecord:
        scenario = self.scenario
        self._apply_disturbances()
        if self.tick % self.frame_every == 0:
            self._sense()
        is_contact, is_slip, primary = self._aggregate_tactile()
        reading = self.sensors[primary].reading
        setpoints = self._control(is_contact, is_slip, reading.deformation)
        self.hand_state, self.report = step_hand(
            scenario.hand,
            self.hand_state,
            setpoints.as_tuple(),
            self.current_objects(),
            scenario.dt,
        )
        self.tick += 1
        record = TickRecord(
            tick=self.tick,
            time=self.hand_state.time,
            mode=self.controller.mode.value,
            agonist_encoder=self.hand_state.agonist_encoder,
            antagonist_encoder=self.hand_state.antagonist_encoder,
            agonist_setpoint=setpoints.agonist,
            antagonist_setpoint=setpoints.antagonist,
            joints=tuple(f.angles for f in self.hand_state.fingers),
            fingertip_contacts=tuple(f.fingertip_contact for f in self.report.fingers),
            fingertip_contact_count=self.report.fingertip_contact_count,
            tactile_finger=primary,
            tactile_center=reading.slip.center,
            is_contact=is_contact,
            is_slip=is_slip,
            deformation=reading.deformation,
            force=reading.force,
        )
        self.records.append(record)
        return record

    def run(self) -> list[TickRecord]:
        n = int(round(self.scenario.duration * self.scenario.tick_rate))
        for _ in range(n):
            self.step()
        return self.records
