"""Virtual Point Guidance: docking points and the four-phase maneuver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .core import Pose2D, VelocityCommand, angle_diff, wrap_angle
from .errors import InvalidArgumentError
from .kinematics import RobotState, step_kinematics

DEFAULT_STANDOFF = 1.0
DEFAULT_POS_TOL = 0.02
DEFAULT_HEADING_TOL = math.radians(1.0)

ROTATE, APPROACH, ROTATE2, DOCK = "Rotate", "Approach", "Rotate2", "Dock"
PHASE_ORDER = (ROTATE, APPROACH, ROTATE2, DOCK)


@dataclass(frozen=True)
class DockingStation:
    """Docking face pose; ``pose.psi`` points outward, towards an approaching robot."""

    pose: Pose2D
    dock_depth: float = 0.0

    def __post_init__(self):
        if not self.dock_depth >= 0:
            raise InvalidArgumentError("dock_depth must be non-negative")

    @property
    def docking_heading(self) -> float:
        return wrap_angle(self.pose.psi + math.pi)


@dataclass(frozen=True)
class Tolerances:
    position: float = DEFAULT_POS_TOL
    heading: float = DEFAULT_HEADING_TOL

    def __post_init__(self):
        if not (self.position > 0 and self.heading > 0):
            raise InvalidArgumentError("tolerances must be positive")


@dataclass(frozen=True)
class PhaseSpec:
    kind: str
    target: Pose2D
    tolerance: float

    def __post_init__(self):
        if self.kind not in PHASE_ORDER:
            raise InvalidArgumentError(f"unknown phase {self.kind!r}")
        if not self.tolerance > 0:
            raise InvalidArgumentError("phase tolerance must be positive")

    @property
    def is_rotation(self) -> bool:
        return self.kind in (ROTATE, ROTATE2)

    @property
    def target_heading(self) -> float:
        return self.target.psi


@dataclass(frozen=True)
class VPGPlan:
    """Virtual/real docking points and the Rotate, Approach, Rotate, Dock phases.

    ``start_phase`` is the index of the first phase that still needs work;
    earlier phases are already satisfied (or undefined) at planning time.
    """

    virtual_point: Pose2D
    real_point: Pose2D
    phases: tuple
    start_phase: int = 0
    degenerate: bool = False

    def __post_init__(self):
        kinds = tuple(p.kind for p in self.phases)
        if kinds != PHASE_ORDER:
            raise InvalidArgumentError(f"phases must be {PHASE_ORDER}, got {kinds}")

    @property
    def active_phases(self) -> tuple:
        return self.phases[self.start_phase :]

    def to_text(self) -> str:
        def fmt(p: Pose2D):
            return f"({p.x:.4f}, {p.y:.4f}, {math.degrees(p.psi):.2f} deg)"

        lines = [
            f"virtual_point: {fmt(self.virtual_point)}",
            f"real_point:    {fmt(self.real_point)}",
        ]
        if self.degenerate:
            lines.append("note: robot on the virtual point, phase-1 heading undefined")
        for i, ph in enumerate(self.phases):
            state = "active" if i >= self.start_phase else "skipped"
            if ph.is_rotation:
                what = f"heading {math.degrees(ph.target_heading):.2f} deg (tol {math.degrees(ph.tolerance):.2f} deg)"
            else:
                what = f"point ({ph.target.x:.4f}, {ph.target.y:.4f}) (tol {ph.tolerance:.4f} m)"
            lines.append(f"phase {i + 1} {ph.kind:<8} {what} [{state}]")
        return "\n".join(lines)


def compute_docking_points(station: DockingStation, standoff: float = DEFAULT_STANDOFF):
    """Real point sits ``dock_depth`` behind the face; the virtual point
    ``standoff`` further out along the outward axis. Both face the station."""
    if not standoff > 0:
        raise InvalidArgumentError(f"standoff must be positive, got {standoff!r}")
    p = station.pose
    c, s = math.cos(p.psi), math.sin(p.psi)
    heading = station.docking_heading
    rx, ry = p.x - station.dock_depth * c, p.y - station.dock_depth * s
    real = Pose2D(rx, ry, heading)
    virtual = Pose2D(rx + standoff * c, ry + standoff * s, heading)
    return virtual, real


def plan_vpg(
    robot: Pose2D,
    station: DockingStation,
    standoff: float = DEFAULT_STANDOFF,
    tolerances: Optional[Tolerances] = None,
) -> VPGPlan:
    tol = tolerances or Tolerances()
    virtual, real = compute_docking_points(station, standoff)
    if robot.distance_to(real) <= tol.position and abs(angle_diff(robot.psi, real.psi)) <= tol.heading:
        raise InvalidArgumentError("robot is already docked")
    dx, dy = virtual.x - robot.x, virtual.y - robot.y
    degenerate = math.hypot(dx, dy) <= tol.position
    face = robot.psi if degenerate else math.atan2(dy, dx)
    phases = (
        PhaseSpec(ROTATE, Pose2D(robot.x, robot.y, face), tol.heading),
        PhaseSpec(APPROACH, Pose2D(virtual.x, virtual.y, face), tol.position),
        PhaseSpec(ROTATE2, Pose2D(virtual.x, virtual.y, real.psi), tol.heading),
        PhaseSpec(DOCK, real, tol.position),
    )
    start = 0
    if degenerate:
        start = 2
        if abs(angle_diff(robot.psi, real.psi)) <= tol.heading:
            start = 3
    elif abs(angle_diff(robot.psi, face)) <= tol.heading:
        start = 1
    return VPGPlan(virtual, real, phases, start, degenerate)


def phase_done(phase: PhaseSpec, pose: Pose2D) -> bool:
    if phase.is_rotation:
        return abs(angle_diff(phase.target_heading, pose.psi)) <= phase.tolerance
    return pose.distance_to(phase.target) <= phase.tolerance


def rotate_command(pose: Pose2D, target_heading: float, w_max: float, gain: float = 2.0, dt: Optional[float] = None):
    """Proportional in-place yaw command, never overshooting within one ``dt``."""
    err = angle_diff(target_heading, pose.psi)
    w = gain * err
    if dt is not None:
        lim = abs(err) / dt
        w = max(-lim, min(lim, w))
    return VelocityCommand(0.0, max(-w_max, min(w_max, w)))


@dataclass
class TrackResult:
    final: Pose2D
    steps: int
    poses: list = field(default_factory=list)
    converged: bool = False


def track_plan(
    robot: Pose2D,
    plan: VPGPlan,
    dt: float = 0.05,
    v_max: float = 0.5,
    w_max: float = 1.5,
    max_steps: int = 20000,
) -> TrackResult:
    """Noise-free closed-loop execution of a plan on the unicycle model.

    Rotations use a proportional yaw loop. Approach steers at the virtual
    point, then holds heading once close; Dock translates along the docking
    heading with heading hold. Straight phases stop where the remaining
    along-track distance reaches zero.
    """
    state = RobotState(robot)
    poses = [robot]
    steps = 0
    for phase in plan.active_phases:
        hold = phase.target.psi
        while steps < max_steps:
            pose = state.pose
            if phase.is_rotation:
                err = angle_diff(phase.target_heading, pose.psi)
                if abs(err) <= 0.05 * phase.tolerance:
                    break
                cmd = rotate_command(pose, phase.target_heading, w_max, gain=0.5 / dt, dt=dt)
            else:
                tx, ty = phase.target.x - pose.x, phase.target.y - pose.y
                dist = math.hypot(tx, ty)
                if phase.kind == APPROACH and dist > 0.1:
                    hold = math.atan2(ty, tx)
                along = tx * math.cos(hold) + ty * math.sin(hold)
                if along <= 1e-6 * phase.tolerance:
                    break
                v = min(v_max, along / dt)
                w = angle_diff(hold, pose.psi) / dt * 0.5
                cmd = VelocityCommand(v, max(-w_max, min(w_max, w)))
            state = step_kinematics(state, cmd, dt)
            poses.append(state.pose)
            steps += 1
    final = state.pose
    converged = phase_done(plan.phases[-1], final) and abs(angle_diff(plan.real_point.psi, final.psi)) <= plan.phases[2].tolerance
    return TrackResult(final, steps, poses, converged)
