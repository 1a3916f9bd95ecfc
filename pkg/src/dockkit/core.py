"""Planar poses, unit orientation vectors and fixed-length trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, ShapeError

TWO_PI = 2.0 * math.pi

#: Default number of waypoints in a resampled trajectory.
DEFAULT_Q = 32


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [-pi, pi]; exactly +-pi maps to +pi."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise InvalidArgumentError(f"angle must be finite, got {theta!r}")
    r = math.remainder(theta, TWO_PI)
    if r <= -math.pi:
        r = math.pi
    return r


def wrap_angles(theta) -> np.ndarray:
    """Vectorised :func:`wrap_angle` (same boundary convention)."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise InvalidArgumentError("angles must be finite")
    r = np.remainder(theta + math.pi, TWO_PI) - math.pi
    return np.where(r <= -math.pi, math.pi, r)


def angle_diff(a: float, b: float) -> float:
    """Signed shortest rotation taking heading ``b`` to heading ``a``."""
    return wrap_angle(a - b)


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    psi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidArgumentError("pose position must be finite")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "psi", wrap_angle(self.psi))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def compose(self, other: "Pose2D") -> "Pose2D":
        """``self * other``: express ``other`` (given in this pose's frame) in the parent frame."""
        c, s = math.cos(self.psi), math.sin(self.psi)
        return Pose2D(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.psi + other.psi,
        )

    def inverse(self) -> "Pose2D":
        c, s = math.cos(self.psi), math.sin(self.psi)
        return Pose2D(-c * self.x - s * self.y, s * self.x - c * self.y, -self.psi)

    def relative_to(self, frame: "Pose2D") -> "Pose2D":
        """This pose expressed in ``frame``."""
        return frame.inverse().compose(self)

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class OrientationVec:
    c: float
    s: float

    def __post_init__(self):
        if abs(self.c * self.c + self.s * self.s - 1.0) > 1e-9:
            raise InvalidArgumentError(f"orientation ({self.c}, {self.s}) is not unit norm")

    @property
    def angle(self) -> float:
        return math.atan2(self.s, self.c)


def orientation_from_angle(psi: float) -> OrientationVec:
    psi = float(psi)
    if not math.isfinite(psi):
        raise InvalidArgumentError(f"angle must be finite, got {psi!r}")
    return OrientationVec(math.cos(psi), math.sin(psi))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Q positions (metres) paired with Q unit orientation vectors (cos, sin).

    Both are stored as read-only ``(Q, 2)`` float arrays. ``norm_tol`` bounds
    ``|c^2 + s^2 - 1|``; the loose default admits text round-trips at 9
    significant digits.
    """

    positions: np.ndarray
    orientations: np.ndarray
    norm_tol: float = field(default=1e-6, repr=False)

    def __post_init__(self):
        p = _frozen(self.positions)
        o = _frozen(self.orientations)
        if p.ndim != 2 or p.shape[1] != 2 or o.ndim != 2 or o.shape[1] != 2:
            raise ShapeError(f"positions and orientations must be (Q, 2); got {p.shape}, {o.shape}")
        if p.shape[0] != o.shape[0]:
            raise ShapeError(f"length mismatch: {p.shape[0]} positions vs {o.shape[0]} orientations")
        if p.shape[0] < 1:
            raise ShapeError("trajectory must hold at least one waypoint")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(o))):
            raise InvalidArgumentError("trajectory entries must be finite")
        err = np.abs(np.sum(o * o, axis=1) - 1.0)
        if np.any(err > self.norm_tol):
            i = int(np.argmax(err))
            raise InvalidArgumentError(f"orientation {i} ({o[i, 0]}, {o[i, 1]}) is not unit norm")
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "orientations", o)

    @classmethod
    def from_poses(cls, poses: Sequence[Pose2D]) -> "Trajectory":
        pos = [(p.x, p.y) for p in poses]
        ori = [(math.cos(p.psi), math.sin(p.psi)) for p in poses]
        return cls(pos, ori)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def headings(self) -> np.ndarray:
        return np.arctan2(self.orientations[:, 1], self.orientations[:, 0])

    def poses(self) -> list[Pose2D]:
        return [Pose2D(x, y, h) for (x, y), h in zip(self.positions, self.headings)]

    def transformed(self, frame: Pose2D) -> "Trajectory":
        """Map a trajectory expressed in ``frame`` to the parent frame."""
        c, s = math.cos(frame.psi), math.sin(frame.psi)
        R = np.array([[c, -s], [s, c]])
        return Trajectory(
            self.positions @ R.T + frame.xy, self.orientations @ R.T, norm_tol=self.norm_tol
        )

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self.positions, other.positions) and np.array_equal(
            self.orientations, other.orientations
        )

    __hash__ = None


@dataclass(frozen=True)
class VelocityCommand:
    v: float
    w: float


class EpisodeStatus:
    DOCKED = "Docked"
    TIMEOUT = "Timeout"
    COLLISION = "Collision"
    ALL = (DOCKED, TIMEOUT, COLLISION)


@dataclass(frozen=True, eq=False)
class EpisodeRecord:
    """One dataset sample: the depth snapshot, poses and logged trajectory.

    ``raw_log`` is a list of ``(t, Pose2D)`` in the start-pose frame.
    ``depth`` holds the in-memory image behind ``depth_ref``; ``world`` and
    ``config`` are kept so archives are self-describing.
    """

    depth_ref: str
    intrinsics: "object"
    start_pose: Pose2D
    station_pose: Pose2D
    gt_trajectory: Trajectory
    raw_log: tuple
    rgb_ref: Optional[str] = None
    depth: Optional["object"] = None
    status: str = EpisodeStatus.DOCKED
    seed: int = 0
    config: Optional["object"] = None
    world: Optional["object"] = None
    source: str = "rule_based"

    def __post_init__(self):
        log = tuple((float(t), p) for t, p in self.raw_log)
        object.__setattr__(self, "raw_log", log)
        ts = [t for t, _ in log]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidArgumentError("raw_log times must be strictly increasing")
        if self.status not in EpisodeStatus.ALL:
            raise InvalidArgumentError(f"unknown episode status {self.status!r}")
        if self.source not in ("rule_based", "expert"):
            raise InvalidArgumentError(f"unknown source {self.source!r}")

    @property
    def duration(self) -> float:
        return self.raw_log[-1][0] - self.raw_log[0][0] if self.raw_log else 0.0
