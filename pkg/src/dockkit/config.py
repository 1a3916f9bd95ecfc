"""Global configuration tree: defaults, file loading, validation, overrides."""

from __future__ import annotations

import copy
import json
import math
import os
from pathlib import Path
from typing import Optional

from .dwa import DWAConfig
from .errors import InvalidArgumentError, ParseError
from .geometry import CameraIntrinsics
from .planner import Tolerances
from .sim import DEFAULT_BOUNDS, EpisodeConfig, default_camera

ENV_VAR = "DOCKKIT_CONFIG"


class ConfigError(InvalidArgumentError):
    pass


DEFAULTS: dict = {
    "seed": 0,
    "episodes": 10,
    "out": "dataset",
    "simulator": {
        "log_hz": 10.0,
        "max_duration": 60.0,
        "q_points": 32,
        "lidar_rays": 360,
        "lidar_max_range": 8.0,
        "mount_height": 0.3,
        "depth_scale": 1000.0,
        "max_obstacles": 4,
        "bounds": list(DEFAULT_BOUNDS),
        "rotate_gain": 2.0,
        "camera": default_camera().to_dict(),
    },
    "vpg": {"standoff": 1.0, "position_tol": 0.02, "heading_tol_deg": 1.0},
    "dwa": DWAConfig().to_dict(),
    "netmath": {
        "seed": 0,
        "grid": [8, 8, 4],
        "scales": [1, 2, 3, 6],
        "tokens": 16,
        "d": 32,
        "steps": 8,
        "ln_eps": 1e-5,
        "loss_alpha": 0.63,
        "loss_beta": 0.37,
    },
    "eval": {"kinematic_margin": 1.1},
}

# keys whose value is free-form (validated by the consuming type instead)
_OPAQUE = {("simulator", "camera")}


def _check(value, default, path):
    where = ".".join(path)
    if isinstance(default, dict) and tuple(path) not in _OPAQUE:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a table")
        unknown = set(value) - set(default)
        if unknown:
            raise ConfigError(f"unknown config keys under {where or '<root>'}: {sorted(unknown)}")
        return {k: _check(value[k], default[k], path + [k]) if k in value else copy.deepcopy(default[k]) for k in default}
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{where}: expected a finite number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return value
    return value


def resolve(user: Optional[dict] = None, overrides: Optional[dict] = None) -> dict:
    """Merge user config and dotted-key overrides over the defaults and validate."""
    tree = _check(user or {}, DEFAULTS, [])
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        parts = dotted.split(".")
        node = tree
        for p in parts[:-1]:
            node = node[p]
        node[parts[-1]] = value
    tree = _check(tree, DEFAULTS, [])
    validate(tree)
    return tree


def validate(tree: dict) -> None:
    """Build every typed object once so invalid values fail before any work."""
    try:
        episode_template(tree)
        CameraIntrinsics.from_dict(tree["simulator"]["camera"])
    except (InvalidArgumentError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if tree["episodes"] < 0:
        raise ConfigError("episodes must be non-negative")
    if not 0 <= tree["simulator"]["max_obstacles"] <= 50:
        raise ConfigError("simulator.max_obstacles must be in [0, 50]")
    nm = tree["netmath"]
    if min(nm["grid"][:2]) < max(nm["scales"]):
        raise ConfigError("netmath.scales must not exceed the grid size")


def load(path=None) -> dict:
    """Read a JSON config file; ``None`` falls back to $DOCKKIT_CONFIG or {}."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return {}
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table")
    return data


def dwa_config(tree: dict) -> DWAConfig:
    return DWAConfig.from_dict(tree["dwa"])


def episode_template(tree: dict, start_pose=None, seed: int = 0) -> EpisodeConfig:
    from .core import Pose2D

    sim = tree["simulator"]
    vpg = tree["vpg"]
    return EpisodeConfig(
        start_pose=start_pose or Pose2D(1.0, 0.0, math.pi),
        log_hz=sim["log_hz"],
        max_duration=sim["max_duration"],
        standoff=vpg["standoff"],
        dwa=dwa_config(tree),
        Q=tree["simulator"]["q_points"],
        seed=seed,
        tolerances=Tolerances(vpg["position_tol"], math.radians(vpg["heading_tol_deg"])),
        camera=CameraIntrinsics.from_dict(sim["camera"]),
        mount_height=sim["mount_height"],
        depth_scale=sim["depth_scale"],
        lidar_rays=sim["lidar_rays"],
        lidar_max_range=sim["lidar_max_range"],
        rotate_gain=sim["rotate_gain"],
    )


def dumps(tree: dict) -> str:
    return json.dumps(tree, indent=2, sort_keys=True)
