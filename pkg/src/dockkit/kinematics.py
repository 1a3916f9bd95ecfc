"""Unicycle model of a differential-drive base."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Pose2D, VelocityCommand, wrap_angle
from .errors import InvalidArgumentError

STRAIGHT_EPS = 1e-9


@dataclass(frozen=True)
class RobotState:
    pose: Pose2D
    v: float = 0.0
    w: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.w)):
            raise InvalidArgumentError("velocities must be finite")


def arc_update(x: float, y: float, psi: float, v: float, w: float, dt: float):
    """Exact constant-(v, w) update; returns the unwrapped heading."""
    if abs(w) < STRAIGHT_EPS:
        return x + v * dt * math.cos(psi), y + v * dt * math.sin(psi), psi
    psi1 = psi + w * dt
    r = v / w
    return x + r * (math.sin(psi1) - math.sin(psi)), y + r * (math.cos(psi) - math.cos(psi1)), psi1


def step_kinematics(state: RobotState, cmd: VelocityCommand, dt: float) -> RobotState:
    """Advance the robot by ``dt`` holding ``cmd``; the new state carries ``cmd``'s velocities."""
    if not dt > 0:
        raise InvalidArgumentError("dt must be positive")
    p = state.pose
    x, y, psi = arc_update(p.x, p.y, p.psi, cmd.v, cmd.w, dt)
    return RobotState(Pose2D(x, y, wrap_angle(psi)), cmd.v, cmd.w)


def arc_rollout_arrays(x0, y0, psi0, v, w, dt: float, steps: int):
    """Vectorised exact-arc rollout for arrays of (v, w) candidates.

    Returns ``(xs, ys, psis)`` of shape ``v.shape + (steps,)``; headings are
    left unwrapped.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    k = np.arange(1, steps + 1) * dt
    straight = np.abs(w) < STRAIGHT_EPS
    w_safe = np.where(straight, 1.0, w)
    psis = psi0 + w[..., None] * k
    r = (v / w_safe)[..., None]
    xs_arc = x0 + r * (np.sin(psis) - math.sin(psi0))
    ys_arc = y0 + r * (math.cos(psi0) - np.cos(psis))
    xs_line = x0 + v[..., None] * k * math.cos(psi0)
    ys_line = y0 + v[..., None] * k * math.sin(psi0)
    s = straight[..., None]
    xs = np.where(s, xs_line, xs_arc)
    ys = np.where(s, ys_line, ys_arc)
    psis = np.where(s, psi0 + 0.0 * k, psis)
    return xs, ys, psis
