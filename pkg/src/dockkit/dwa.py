"""Dynamic Window Approach controller over a planar LiDAR scan."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .core import Pose2D, VelocityCommand
from .errors import InvalidArgumentError
from .kinematics import RobotState, arc_rollout_arrays


@dataclass(frozen=True)
class DWAWeights:
    heading: float = 0.6
    clearance: float = 0.25
    velocity: float = 0.15

    def __post_init__(self):
        if min(self.heading, self.clearance, self.velocity) < 0:
            raise InvalidArgumentError("DWA weights must be non-negative")


@dataclass(frozen=True)
class DWAConfig:
    """Kinematic limits, sampling and scoring parameters.

    ``safety_margin`` is extra clearance on top of ``robot_radius`` used when
    discarding candidates; it absorbs the angular gaps between LiDAR rays.
    ``goal_braking`` caps sampled speeds so the robot can stop at the goal.
    """

    v_max: float = 1.0
    v_min: float = 0.0
    w_max: float = 1.5
    a_v: float = 1.0
    a_w: float = 2.0
    dt: float = 0.1
    horizon: float = 1.5
    samples_v: int = 11
    samples_w: int = 21
    weights: DWAWeights = field(default_factory=DWAWeights)
    robot_radius: float = 0.35
    safety_margin: float = 0.05
    goal_braking: bool = True

    def __post_init__(self):
        if isinstance(self.weights, dict):
            object.__setattr__(self, "weights", DWAWeights(**self.weights))
        if not self.v_max > self.v_min:
            raise InvalidArgumentError("v_max must exceed v_min")
        for name in ("w_max", "a_v", "a_w", "dt", "horizon", "robot_radius"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if int(self.samples_v) < 1 or int(self.samples_w) < 1:
            raise InvalidArgumentError("sample counts must be positive")
        if self.safety_margin < 0:
            raise InvalidArgumentError("safety_margin must be non-negative")

    @property
    def steps(self) -> int:
        return max(1, int(round(self.horizon / self.dt)))

    @property
    def admissible_distance(self) -> float:
        return self.robot_radius + self.safety_margin

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["weights"] = {f.name: getattr(self.weights, f.name) for f in fields(DWAWeights)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DWAConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidArgumentError(f"unknown DWA keys: {sorted(extra)}")
        d = dict(d)
        if "weights" in d:
            w = d["weights"]
            extra = set(w) - {f.name for f in fields(DWAWeights)}
            if extra:
                raise InvalidArgumentError(f"unknown DWA weight keys: {sorted(extra)}")
            d["weights"] = DWAWeights(**w)
        return cls(**d)


@dataclass(frozen=True, eq=False)
class LidarScan:
    ranges: np.ndarray
    angle_min: float
    angle_increment: float
    max_range: float
    in_collision: bool = False

    def __post_init__(self):
        r = np.array(self.ranges, dtype=float).reshape(-1)
        if r.size < 1:
            raise InvalidArgumentError("scan needs at least one range")
        if not self.in_collision and (np.any(r <= 0) or np.any(r > self.max_range)):
            raise InvalidArgumentError("ranges must lie in (0, max_range]")
        r.setflags(write=False)
        object.__setattr__(self, "ranges", r)

    @property
    def angles(self) -> np.ndarray:
        return self.angle_min + self.angle_increment * np.arange(self.ranges.size)

    def obstacle_points(self, pose: Pose2D) -> np.ndarray:
        """World-frame hit points (rays that reached max_range are dropped)."""
        hit = self.ranges < self.max_range
        a = pose.psi + self.angles[hit]
        r = self.ranges[hit]
        return np.stack([pose.x + r * np.cos(a), pose.y + r * np.sin(a)], axis=1)


EMPTY_POINTS = np.empty((0, 2))


def dynamic_window(state: RobotState, cfg: DWAConfig):
    """Velocities reachable within one control period, clipped to the limits."""
    v_lo = max(cfg.v_min, state.v - cfg.a_v * cfg.dt)
    v_hi = min(cfg.v_max, state.v + cfg.a_v * cfg.dt)
    w_lo = max(-cfg.w_max, state.w - cfg.a_w * cfg.dt)
    w_hi = min(cfg.w_max, state.w + cfg.a_w * cfg.dt)
    # a state outside the limits collapses the window onto the nearest limit
    if v_lo > v_hi:
        v_lo = v_hi = min(max(state.v, cfg.v_min), cfg.v_max)
    if w_lo > w_hi:
        w_lo = w_hi = min(max(state.w, -cfg.w_max), cfg.w_max)
    return v_lo, v_hi, w_lo, w_hi


def rollout(state: RobotState, v: float, w: float, dt: float, horizon: float) -> list[Pose2D]:
    """Poses at ``dt, 2dt, ...`` up to ``horizon`` holding ``(v, w)``."""
    if not (dt > 0 and horizon > 0):
        raise InvalidArgumentError("dt and horizon must be positive")
    steps = max(1, int(round(horizon / dt)))
    p = state.pose
    xs, ys, ps = arc_rollout_arrays(p.x, p.y, p.psi, np.array([v]), np.array([w]), dt, steps)
    return [Pose2D(x, y, h) for x, y, h in zip(xs[0], ys[0], ps[0])]


def candidate_grid(state: RobotState, goal: Pose2D, cfg: DWAConfig):
    """Sampled (v, w) candidates, v-major then w, as two flat arrays."""
    v_lo, v_hi, w_lo, w_hi = dynamic_window(state, cfg)
    if cfg.goal_braking:
        cap = math.sqrt(2.0 * cfg.a_v * state.pose.distance_to(goal))
        v_hi = max(v_lo, min(v_hi, cap))
    vs = np.linspace(v_lo, v_hi, cfg.samples_v) if cfg.samples_v > 1 else np.array([v_hi])
    ws = np.linspace(w_lo, w_hi, cfg.samples_w) if cfg.samples_w > 1 else np.array([0.5 * (w_lo + w_hi)])
    V, W = np.meshgrid(vs, ws, indexing="ij")
    return V.ravel(), W.ravel()


def normalize_scores(raw: np.ndarray) -> np.ndarray:
    """Min-max normalise to [0, 1]; a constant score vector maps to zeros."""
    lo, hi = np.min(raw), np.max(raw)
    if hi - lo <= 0:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def _weighted(wts: DWAWeights, heading, clearance, velocity) -> np.ndarray:
    return (
        wts.heading * normalize_scores(heading)
        + wts.clearance * normalize_scores(clearance)
        + wts.velocity * normalize_scores(velocity)
    )


@dataclass(frozen=True, eq=False)
class CandidateEvaluation:
    v: np.ndarray
    w: np.ndarray
    heading: np.ndarray
    clearance: np.ndarray
    velocity: np.ndarray
    admissible: np.ndarray
    min_distance: np.ndarray
    total: np.ndarray
    best: Optional[int]


def evaluate_candidates(
    state: RobotState, goal: Pose2D, obstacles: np.ndarray, cfg: DWAConfig, raw_transform=None
) -> CandidateEvaluation:
    """Score every candidate in the grid against world-frame obstacle points.

    ``raw_transform`` optionally maps ``(name, raw_scores)`` to new raw scores
    before normalisation (used to probe normalisation invariance).
    """
    V, W = candidate_grid(state, goal, cfg)
    p = state.pose
    xs, ys, ps = arc_rollout_arrays(p.x, p.y, p.psi, V, W, cfg.dt, cfg.steps)

    ex, ey, eh = xs[:, -1], ys[:, -1], ps[:, -1]
    bearing = np.arctan2(goal.y - ey, goal.x - ex)
    err = np.abs(np.remainder(bearing - eh + math.pi, 2.0 * math.pi) - math.pi)
    heading = 1.0 - err / math.pi

    if obstacles.shape[0]:
        dx = xs[:, :, None] - obstacles[None, None, :, 0]
        dy = ys[:, :, None] - obstacles[None, None, :, 1]
        min_d = np.sqrt(np.min(dx * dx + dy * dy, axis=(1, 2)))
    else:
        min_d = np.full(V.shape, np.inf)
    clearance = np.minimum(min_d, 3.0 * cfg.robot_radius)
    velocity = V / cfg.v_max

    if raw_transform is not None:
        heading = raw_transform("heading", heading)
        clearance = raw_transform("clearance", clearance)
        velocity = raw_transform("velocity", velocity)

    admissible = min_d >= cfg.admissible_distance
    total = np.full(V.shape, -np.inf)
    best = None
    if np.any(admissible):
        idx = np.flatnonzero(admissible)
        score = _weighted(cfg.weights, heading[idx], clearance[idx], velocity[idx])
        total[idx] = score
        best = int(idx[int(np.argmax(score))])
    return CandidateEvaluation(V, W, heading, clearance, velocity, admissible, min_d, total, best)


def _best_of(ev: CandidateEvaluation, mask: np.ndarray, cfg: DWAConfig) -> VelocityCommand:
    idx = np.flatnonzero(mask)
    score = _weighted(cfg.weights, ev.heading[idx], ev.clearance[idx], ev.velocity[idx])
    k = int(idx[int(np.argmax(score))])
    return VelocityCommand(float(ev.v[k]), float(ev.w[k]))


def escape_command(state: RobotState, cfg: DWAConfig) -> VelocityCommand:
    """Rotate-in-place fallback, clipped into the dynamic window."""
    v_lo, v_hi, w_lo, w_hi = dynamic_window(state, cfg)
    return VelocityCommand(min(max(0.0, v_lo), v_hi), min(max(0.5 * cfg.w_max, w_lo), w_hi))


def dwa_step(
    state: RobotState,
    goal: Pose2D,
    scan: Optional[LidarScan],
    cfg: DWAConfig,
    require_motion: bool = False,
) -> VelocityCommand:
    """Best admissible velocity command toward ``goal``.

    Ties go to the lowest candidate index. When nothing is admissible the
    robot rotates in place toward open space. ``require_motion`` restricts
    the choice to ``v > 0`` candidates, rotating in place if none is admissible.
    """
    if scan is None:
        obstacles = EMPTY_POINTS
    else:
        obstacles = scan.obstacle_points(state.pose)
        # points beyond this cannot affect admissibility or the clipped clearance
        reach = cfg.v_max * cfg.horizon + max(3.0 * cfg.robot_radius, cfg.admissible_distance) + 1e-6
        if obstacles.shape[0]:
            d = np.hypot(obstacles[:, 0] - state.pose.x, obstacles[:, 1] - state.pose.y)
            obstacles = obstacles[d <= reach]
    ev = evaluate_candidates(state, goal, obstacles, cfg)
    if require_motion:
        moving = ev.admissible & (ev.v > 0.0)
        if not np.any(moving):
            return escape_command(state, cfg)
        if not moving[ev.best]:
            return _best_of(ev, moving, cfg)
    if ev.best is None:
        return escape_command(state, cfg)
    return VelocityCommand(float(ev.v[ev.best]), float(ev.w[ev.best]))
