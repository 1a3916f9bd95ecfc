"""Visual-docking toolkit: depth geometry, VPG + DWA docking simulation,
dataset archives, evaluation metrics and a numeric reference of the fusion
network's forward math."""

from .core import (
    EpisodeRecord,
    EpisodeStatus,
    OrientationVec,
    Pose2D,
    Trajectory,
    VelocityCommand,
    orientation_from_angle,
    wrap_angle,
)
from .errors import DockkitError

__version__ = "0.1.0"

__all__ = [
    "DockkitError",
    "EpisodeRecord",
    "EpisodeStatus",
    "OrientationVec",
    "Pose2D",
    "Trajectory",
    "VelocityCommand",
    "orientation_from_angle",
    "wrap_angle",
]
