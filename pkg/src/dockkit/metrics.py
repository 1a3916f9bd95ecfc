"""Trajectory evaluation: L2 Dis., AER, FDPE, FDOE and success rate."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Pose2D, Trajectory
from .errors import InvalidArgumentError, ShapeError

FDPE_THRESHOLD = 0.05  # metres, strict
FDOE_THRESHOLD = 5.0  # degrees, strict
KINEMATIC_MARGIN = 1.1


def _check_pair(pred: Trajectory, gt: Trajectory):
    if len(pred) != len(gt):
        raise ShapeError(f"trajectory lengths differ: {len(pred)} vs {len(gt)}")


def _angle_errors_deg(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ha = np.arctan2(a[:, 1], a[:, 0])
    hb = np.arctan2(b[:, 1], b[:, 0])
    d = np.abs(np.remainder(ha - hb + math.pi, 2.0 * math.pi) - math.pi)
    return np.degrees(np.minimum(d, math.pi))


def l2_distance(pred: Trajectory, gt: Trajectory) -> float:
    """Mean Euclidean distance between index-corresponding waypoints."""
    _check_pair(pred, gt)
    return float(np.mean(np.linalg.norm(pred.positions - gt.positions, axis=1)))


def aer(pred: Trajectory, gt: Trajectory) -> float:
    """Average absolute heading error in degrees (shortest arc)."""
    _check_pair(pred, gt)
    return float(np.mean(_angle_errors_deg(pred.orientations, gt.orientations)))


def _final(pred: Trajectory, gt: Trajectory):
    if len(pred) == 0 or len(gt) == 0:
        raise InvalidArgumentError("trajectories must be non-empty")


def fdpe(pred: Trajectory, gt: Trajectory) -> float:
    _final(pred, gt)
    return float(np.linalg.norm(pred.positions[-1] - gt.positions[-1]))


def fdoe(pred: Trajectory, gt: Trajectory) -> float:
    _final(pred, gt)
    return float(_angle_errors_deg(pred.orientations[-1:], gt.orientations[-1:])[0])


@dataclass(frozen=True)
class KinematicLimits:
    v_max: float
    w_max: float

    @classmethod
    def from_dwa(cls, cfg, margin: float = KINEMATIC_MARGIN) -> "KinematicLimits":
        return cls(margin * max(abs(cfg.v_max), abs(cfg.v_min)), margin * cfg.w_max)


def kinematically_feasible(traj: Trajectory, duration: float, limits: KinematicLimits) -> bool:
    """Whether the waypoints can be driven within ``duration`` under the limits.

    Waypoints get uniform timestamps over the duration; each segment's speed
    must respect ``v_max``. Turning is budgeted over the whole duration: the
    sum over segments of max(length / v_max, |turn| / w_max) may not exceed
    it. A per-segment turn-rate test would reject every in-place rotation,
    which arc-length resampling squeezes into a single segment.
    """
    if not duration > 0:
        raise InvalidArgumentError("duration must be positive")
    if len(traj) < 2:
        return True
    seg = np.linalg.norm(np.diff(traj.positions, axis=0), axis=1)
    h = traj.headings
    turn = np.abs(np.remainder(np.diff(h) + math.pi, 2.0 * math.pi) - math.pi)
    period = duration / (len(traj) - 1)
    if np.any(seg / period > limits.v_max * (1 + 1e-9)):
        return False
    needed = np.sum(np.maximum(seg / limits.v_max, turn / limits.w_max))
    return bool(needed <= duration * (1 + 1e-9))


def collision_free(traj: Trajectory, world, robot_radius: float, frame: Optional[Pose2D] = None) -> bool:
    """No waypoint closer than ``robot_radius`` to an obstacle or wall.

    ``frame`` is the pose the trajectory is expressed in (the episode start).
    """
    t = traj.transformed(frame) if frame is not None else traj
    d = world.clearance(t.positions[:, 0], t.positions[:, 1])
    return bool(np.all(d >= robot_radius))


@dataclass(frozen=True)
class EvalReport:
    l2_dis: float
    aer: float
    fdpe: float
    fdoe: float
    collision_free: bool
    kinematically_feasible: bool
    success: bool
    episode_id: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


def is_success(fdpe_m: float, fdoe_deg: float, collision_ok: bool, feasible: bool) -> bool:
    return fdpe_m < FDPE_THRESHOLD and fdoe_deg < FDOE_THRESHOLD and collision_ok and feasible


def evaluate(
    pred: Trajectory,
    gt: Trajectory,
    world=None,
    limits: Optional[KinematicLimits] = None,
    duration: Optional[float] = None,
    frame: Optional[Pose2D] = None,
    robot_radius: float = 0.35,
    episode_id: Optional[str] = None,
) -> EvalReport:
    """All metrics plus the success verdict for one predicted trajectory.

    Without a world the path counts as collision-free; without limits and a
    duration it counts as feasible.
    """
    l2 = l2_distance(pred, gt)
    a = aer(pred, gt)
    fp = fdpe(pred, gt)
    fo = fdoe(pred, gt)
    cf = True if world is None else collision_free(pred, world, robot_radius, frame)
    kf = True
    if limits is not None and duration is not None:
        kf = kinematically_feasible(pred, duration, limits)
    return EvalReport(l2, a, fp, fo, cf, kf, is_success(fp, fo, cf, kf), episode_id)


def evaluate_episode(pred: Trajectory, record, episode_id: Optional[str] = None) -> EvalReport:
    """Evaluate against an EpisodeRecord, using its world, limits and duration."""
    cfg = record.config
    limits = KinematicLimits.from_dwa(cfg.dwa) if cfg is not None else None
    radius = cfg.dwa.robot_radius if cfg is not None else 0.35
    return evaluate(
        pred,
        record.gt_trajectory,
        world=record.world,
        limits=limits,
        duration=record.duration if record.duration > 0 else None,
        frame=record.start_pose,
        robot_radius=radius,
        episode_id=episode_id,
    )


def success_rate(reports: Sequence[EvalReport]) -> float:
    if len(reports) == 0:
        raise InvalidArgumentError("no reports to aggregate")
    return sum(1 for r in reports if r.success) / len(reports)


def summarize(reports: Sequence[EvalReport]) -> dict:
    """Means of the four error metrics and SR (the Table I columns)."""
    if len(reports) == 0:
        raise InvalidArgumentError("no reports to aggregate")
    return {
        "episodes": len(reports),
        "l2_dis_m": float(np.mean([r.l2_dis for r in reports])),
        "aer_deg": float(np.mean([r.aer for r in reports])),
        "fdpe_m": float(np.mean([r.fdpe for r in reports])),
        "fdoe_deg": float(np.mean([r.fdoe for r in reports])),
        "sr": success_rate(reports),
    }


def format_summary(summary: dict) -> str:
    head = f"{'L2 Dis.':>10} {'AER':>8} {'FDPE':>10} {'FDOE':>8} {'SR':>8}"
    row = (
        f"{summary['l2_dis_m']:>9.4f}m {summary['aer_deg']:>7.2f}° "
        f"{summary['fdpe_m']:>9.4f}m {summary['fdoe_deg']:>7.2f}° {100 * summary['sr']:>7.1f}%"
    )
    return f"{head}\n{row}\n({summary['episodes']} episodes)"
