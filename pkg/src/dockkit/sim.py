"""2D docking world: obstacles, LiDAR and depth rendering, closed-loop episodes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .core import (
    DEFAULT_Q,
    EpisodeRecord,
    EpisodeStatus,
    Pose2D,
    Trajectory,
    VelocityCommand,
    angle_diff,
)
from .dwa import DWAConfig, LidarScan, dwa_step
from .errors import InvalidArgumentError, RejectedEpisodeError
from .geometry import (
    DEFAULT_DEPTH_SCALE,
    CameraIntrinsics,
    DepthImage,
    ExtrinsicTransform,
    build_direction_matrix,
)
from .kinematics import RobotState, step_kinematics
from .planner import (
    DockingStation,
    Tolerances,
    phase_done,
    plan_vpg,
    rotate_command,
)

OBSTACLE_HEIGHT = 1.0
WALL_HEIGHT = 1.0
STATION_HEIGHT = 0.4
STATION_DEPTH = 0.3
STATION_WIDTH = 0.5

DOCK_POS_THRESHOLD = 0.05
DOCK_HEADING_THRESHOLD = math.radians(5.0)

DEFAULT_LIDAR_RAYS = 360
DEFAULT_LIDAR_RANGE = 8.0
DEFAULT_MOUNT_HEIGHT = 0.3


def default_camera() -> CameraIntrinsics:
    return CameraIntrinsics(64.0, 64.0, 64.0, 64.0, 128, 128)


# ---------------------------------------------------------------- world


@dataclass(frozen=True)
class Box:
    """Axis-aligned box footprint extruded from the ground to ``height``."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float
    height: float = OBSTACLE_HEIGHT

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin and self.height > 0):
            raise InvalidArgumentError(f"degenerate box {self}")

    def distance(self, px, py):
        """Signed distance from points to the footprint (negative inside)."""
        cx, cy = 0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax)
        hx, hy = 0.5 * (self.xmax - self.xmin), 0.5 * (self.ymax - self.ymin)
        qx = np.abs(np.asarray(px, dtype=float) - cx) - hx
        qy = np.abs(np.asarray(py, dtype=float) - cy) - hy
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return outside + inside

    def ray_hits(self, ox, oy, dx, dy):
        """Entry and exit parameters of 2D rays against the footprint (slab method)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            tx1 = (self.xmin - ox) / dx
            tx2 = (self.xmax - ox) / dx
            ty1 = (self.ymin - oy) / dy
            ty2 = (self.ymax - oy) / dy
        # rays parallel to a slab: inside -> unbounded, outside -> miss
        in_x = (ox >= self.xmin) & (ox <= self.xmax)
        in_y = (oy >= self.ymin) & (oy <= self.ymax)
        par_x = dx == 0
        par_y = dy == 0
        tx_lo = np.where(par_x, np.where(in_x, -np.inf, np.inf), np.minimum(tx1, tx2))
        tx_hi = np.where(par_x, np.where(in_x, np.inf, -np.inf), np.maximum(tx1, tx2))
        ty_lo = np.where(par_y, np.where(in_y, -np.inf, np.inf), np.minimum(ty1, ty2))
        ty_hi = np.where(par_y, np.where(in_y, np.inf, -np.inf), np.maximum(ty1, ty2))
        return np.maximum(tx_lo, ty_lo), np.minimum(tx_hi, ty_hi)

    def outline(self) -> np.ndarray:
        return np.array(
            [
                [self.xmin, self.ymin],
                [self.xmax, self.ymin],
                [self.xmax, self.ymax],
                [self.xmin, self.ymax],
                [self.xmin, self.ymin],
            ]
        )

    def to_dict(self) -> dict:
        return {"type": "box", "xmin": self.xmin, "ymin": self.ymin, "xmax": self.xmax, "ymax": self.ymax, "height": self.height}


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float
    height: float = OBSTACLE_HEIGHT

    def __post_init__(self):
        if not (self.r > 0 and self.height > 0):
            raise InvalidArgumentError(f"degenerate circle {self}")

    def distance(self, px, py):
        return np.hypot(np.asarray(px, dtype=float) - self.cx, np.asarray(py, dtype=float) - self.cy) - self.r

    def ray_hits(self, ox, oy, dx, dy):
        fx, fy = ox - self.cx, oy - self.cy
        a = dx * dx + dy * dy
        b = 2.0 * (fx * dx + fy * dy)
        c = fx * fx + fy * fy - self.r * self.r
        disc = b * b - 4.0 * a * c
        ok = (disc >= 0) & (a > 0)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        a_safe = np.where(a > 0, a, 1.0)
        t0 = np.where(ok, (-b - sq) / (2.0 * a_safe), np.inf)
        t1 = np.where(ok, (-b + sq) / (2.0 * a_safe), -np.inf)
        return t0, t1

    def outline(self, n: int = 32) -> np.ndarray:
        a = np.linspace(0.0, 2.0 * math.pi, n + 1)
        return np.stack([self.cx + self.r * np.cos(a), self.cy + self.r * np.sin(a)], axis=1)

    def to_dict(self) -> dict:
        return {"type": "circle", "cx": self.cx, "cy": self.cy, "r": self.r, "height": self.height}


def obstacle_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("type", None)
    if kind == "box":
        return Box(**d)
    if kind == "circle":
        return Circle(**d)
    raise InvalidArgumentError(f"unknown obstacle type {kind!r}")


def station_body(station: DockingStation, robot_radius: float) -> Box:
    """Visual footprint of the charging station behind the real docking point.

    Only rendered in depth images; LiDAR and collision checks ignore it.
    """
    p = station.pose
    c, s = math.cos(p.psi), math.sin(p.psi)
    # front of the body sits where the robot's bumper touches when docked
    front = -station.dock_depth - robot_radius
    back = front - STATION_DEPTH
    corners = []
    for along in (front, back):
        for side in (-0.5 * STATION_WIDTH, 0.5 * STATION_WIDTH):
            corners.append((p.x + along * c - side * s, p.y + along * s + side * c))
    xs, ys = zip(*corners)
    return Box(min(xs), min(ys), max(xs), max(ys), STATION_HEIGHT)


@dataclass(frozen=True)
class World:
    bounds: tuple  # (xmin, ymin, xmax, ymax)
    obstacles: tuple
    station: DockingStation

    def __post_init__(self):
        b = tuple(float(v) for v in self.bounds)
        if len(b) != 4 or not (b[2] > b[0] and b[3] > b[1]):
            raise InvalidArgumentError(f"invalid bounds {self.bounds}")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        sp = self.station.pose
        if not (b[0] < sp.x < b[2] and b[1] < sp.y < b[3]):
            raise InvalidArgumentError("station must lie inside the world bounds")

    @property
    def wall_box(self) -> Box:
        return Box(*self.bounds, height=WALL_HEIGHT)

    def clearance(self, px, py) -> np.ndarray:
        """Distance from points to the nearest obstacle or boundary wall."""
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        xmin, ymin, xmax, ymax = self.bounds
        d = np.minimum(np.minimum(px - xmin, xmax - px), np.minimum(py - ymin, ymax - py))
        for ob in self.obstacles:
            d = np.minimum(d, ob.distance(px, py))
        return d

    def to_dict(self) -> dict:
        sp = self.station.pose
        return {
            "bounds": list(self.bounds),
            "station": {"x": sp.x, "y": sp.y, "psi": sp.psi, "dock_depth": self.station.dock_depth},
            "obstacles": [ob.to_dict() for ob in self.obstacles],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "World":
        extra = set(d) - {"bounds", "station", "obstacles"}
        if extra:
            raise InvalidArgumentError(f"unknown world keys: {sorted(extra)}")
        st = d["station"]
        station = DockingStation(Pose2D(st["x"], st["y"], st["psi"]), st.get("dock_depth", 0.0))
        return cls(tuple(d["bounds"]), tuple(obstacle_from_dict(o) for o in d.get("obstacles", [])), station)


# ---------------------------------------------------------------- sensors


def lidar_scan(
    world: World, pose: Pose2D, n_rays: int = DEFAULT_LIDAR_RAYS, max_range: float = DEFAULT_LIDAR_RANGE
) -> LidarScan:
    """Planar scan over a full turn starting at -pi relative to the heading."""
    if int(n_rays) != n_rays or n_rays < 1:
        raise InvalidArgumentError("n_rays must be a positive integer")
    if not max_range > 0:
        raise InvalidArgumentError("max_range must be positive")
    inc = 2.0 * math.pi / n_rays
    angle_min = -math.pi
    if world.clearance(pose.x, pose.y) <= 0:
        return LidarScan(np.zeros(n_rays), angle_min, inc, max_range, in_collision=True)
    a = pose.psi + angle_min + inc * np.arange(n_rays)
    dx, dy = np.cos(a), np.sin(a)
    ox = np.full(n_rays, pose.x)
    oy = np.full(n_rays, pose.y)
    best = np.full(n_rays, np.inf)
    for ob in world.obstacles:
        t0, t1 = ob.ray_hits(ox, oy, dx, dy)
        hit = (t1 >= t0) & (t0 > 0)
        best = np.where(hit & (t0 < best), t0, best)
    _, t_exit = world.wall_box.ray_hits(ox, oy, dx, dy)
    best = np.minimum(best, t_exit)
    return LidarScan(np.minimum(best, max_range), angle_min, inc, max_range)


def camera_extrinsic(mount_height: float = DEFAULT_MOUNT_HEIGHT) -> ExtrinsicTransform:
    """Camera (x right, y down, z forward) to body (x forward, y left, z up)."""
    R = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
    return ExtrinsicTransform(R, np.array([0.0, 0.0, mount_height]))


def _extruded_hits(ob, ox, oy, oz, dx, dy, dz):
    """Nearest positive hit of 3D rays against an extruded footprint."""
    t0, t1 = ob.ray_hits(ox, oy, dx, dy)
    best = np.full(dx.shape, np.inf)
    # side faces: entry point inside the height band
    finite = np.isfinite(t0)
    z0 = oz + np.where(finite, t0, 0.0) * dz
    side = (t1 >= t0) & (t0 > 0) & (z0 >= 0) & (z0 <= ob.height) & finite
    best = np.where(side, t0, best)
    # top face: rays from above crossing z = height inside the footprint
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = (ob.height - oz) / dz
    top_ok = (dz < 0) & (oz > ob.height) & (tt > 0)
    tx = ox + np.where(top_ok, tt, 0.0) * dx
    ty = oy + np.where(top_ok, tt, 0.0) * dy
    top_ok &= ob.distance(tx, ty) <= 0
    best = np.where(top_ok & (tt < best), tt, best)
    return best


def render_depth(
    world: World,
    pose: Pose2D,
    intr: Optional[CameraIntrinsics] = None,
    mount_height: float = DEFAULT_MOUNT_HEIGHT,
    depth_scale: float = DEFAULT_DEPTH_SCALE,
    robot_radius: float = 0.35,
) -> DepthImage:
    """Pinhole raycast of obstacles, walls, station body and ground plane.

    Depth is the camera-frame z of the first hit, quantised to raw units.
    Pixels without a hit, or beyond the 16-bit range, read 0.
    """
    intr = intr or default_camera()
    dm = build_direction_matrix(intr)
    ext = camera_extrinsic(mount_height)
    body_dirs = dm.dirs @ ext.rotation.T  # z-component 1 in camera = unit forward
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    dx = c * body_dirs[:, 0] - s * body_dirs[:, 1]
    dy = s * body_dirs[:, 0] + c * body_dirs[:, 1]
    dz = body_dirs[:, 2]
    n = dx.size
    ox = np.full(n, pose.x)
    oy = np.full(n, pose.y)
    oz = np.full(n, float(mount_height))
    best = np.full(n, np.inf)
    solids = list(world.obstacles) + [station_body(world.station, robot_radius)]
    for ob in solids:
        best = np.minimum(best, _extruded_hits(ob, ox, oy, oz, dx, dy, dz))
    # boundary walls seen from inside
    _, t_exit = world.wall_box.ray_hits(ox, oy, dx, dy)
    z_exit = oz + t_exit * dz
    wall = np.isfinite(t_exit) & (t_exit > 0) & (z_exit >= 0) & (z_exit <= WALL_HEIGHT)
    best = np.where(wall & (t_exit < best), t_exit, best)
    with np.errstate(divide="ignore", invalid="ignore"):
        tg = -oz / dz
    ground = (dz < 0) & (tg > 0)
    best = np.where(ground & (tg < best), tg, best)
    raw = np.where(np.isfinite(best), np.round(best * depth_scale), 0.0)
    raw = np.where(raw > 65535, 0.0, raw)
    return DepthImage(raw.astype(np.uint16), intr.width, intr.height, depth_scale)


# ---------------------------------------------------------------- episodes


@dataclass(frozen=True)
class EpisodeConfig:
    start_pose: Pose2D
    log_hz: float = 10.0
    max_duration: float = 60.0
    standoff: float = 1.0
    dwa: DWAConfig = field(default_factory=DWAConfig)
    Q: int = DEFAULT_Q
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    camera: CameraIntrinsics = field(default_factory=default_camera)
    mount_height: float = DEFAULT_MOUNT_HEIGHT
    depth_scale: float = DEFAULT_DEPTH_SCALE
    lidar_rays: int = DEFAULT_LIDAR_RAYS
    lidar_max_range: float = DEFAULT_LIDAR_RANGE
    rotate_gain: float = 2.0

    def __post_init__(self):
        if not self.log_hz > 0:
            raise InvalidArgumentError("log_hz must be positive")
        if not self.max_duration > 0:
            raise InvalidArgumentError("max_duration must be positive")
        if int(self.Q) != self.Q or self.Q < 2:
            raise InvalidArgumentError("Q must be an integer >= 2")
        ratio = 1.0 / (self.log_hz * self.dwa.dt)
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise InvalidArgumentError("the log period must be a whole number of control periods")

    @property
    def steps_per_log(self) -> int:
        return int(round(1.0 / (self.log_hz * self.dwa.dt)))

    def to_dict(self) -> dict:
        sp = self.start_pose
        return {
            "start_pose": {"x": sp.x, "y": sp.y, "psi": sp.psi},
            "log_hz": self.log_hz,
            "max_duration": self.max_duration,
            "standoff": self.standoff,
            "dwa": self.dwa.to_dict(),
            "Q": self.Q,
            "seed": self.seed,
            "tolerances": {"position": self.tolerances.position, "heading": self.tolerances.heading},
            "camera": self.camera.to_dict(),
            "mount_height": self.mount_height,
            "depth_scale": self.depth_scale,
            "lidar_rays": self.lidar_rays,
            "lidar_max_range": self.lidar_max_range,
            "rotate_gain": self.rotate_gain,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidArgumentError(f"unknown episode config keys: {sorted(extra)}")
        d = dict(d)
        sp = d["start_pose"]
        d["start_pose"] = Pose2D(sp["x"], sp["y"], sp["psi"])
        if "dwa" in d:
            d["dwa"] = DWAConfig.from_dict(d["dwa"])
        if "tolerances" in d:
            d["tolerances"] = Tolerances(**d["tolerances"])
        if "camera" in d:
            d["camera"] = CameraIntrinsics.from_dict(d["camera"])
        return cls(**d)


@dataclass(frozen=True)
class RawLog:
    samples: tuple

    def __post_init__(self):
        samples = tuple((float(t), p) for t, p in self.samples)
        ts = [t for t, _ in samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidArgumentError("log times must be strictly increasing")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)


def is_docked(pose: Pose2D, real: Pose2D) -> bool:
    return pose.distance_to(real) < DOCK_POS_THRESHOLD and abs(angle_diff(real.psi, pose.psi)) < DOCK_HEADING_THRESHOLD


@dataclass
class EpisodeTrace:
    """Full-rate pose history of an episode (for debugging and plots)."""

    poses: list = field(default_factory=list)
    commands: list = field(default_factory=list)
    phases: list = field(default_factory=list)


# a DWA phase that holds still this long is a deadlock: for PUSH_DISTANCE the
# robot takes the best moving admissible arc, scored without clearance
STALL_TIME = 1.0
STALL_MOVE = 0.01
STALL_TURN = 0.05
PUSH_DISTANCE = 0.3


def run_episode(world: World, cfg: EpisodeConfig, trace: Optional[EpisodeTrace] = None) -> EpisodeRecord:
    """Capture the start depth image, then dock with VPG + DWA while logging.

    Rotation phases use a proportional yaw loop; Approach and Dock use the DWA
    controller. A stalled DWA phase gets a short push along the best moving
    admissible arc. The pose is logged at ``cfg.log_hz`` in the start-pose
    frame and resampled to ``cfg.Q`` waypoints.
    """
    dwa = cfg.dwa
    start = cfg.start_pose
    if world.clearance(start.x, start.y) < dwa.robot_radius:
        raise RejectedEpisodeError(f"start pose ({start.x:.3f}, {start.y:.3f}) is in collision")

    depth = render_depth(world, start, cfg.camera, cfg.mount_height, cfg.depth_scale, dwa.robot_radius)
    plan = plan_vpg(start, world.station, cfg.standoff, cfg.tolerances)
    real = plan.real_point
    phase_idx = plan.start_phase

    state = RobotState(start)
    log = [(0.0, Pose2D(0.0, 0.0, 0.0))]  # start pose is the log origin
    max_steps = int(math.ceil(cfg.max_duration / dwa.dt - 1e-9))
    spl = cfg.steps_per_log
    stall_steps = int(math.ceil(STALL_TIME / dwa.dt - 1e-9))
    push_dwa = replace(dwa, weights=replace(dwa.weights, clearance=0.0))
    still_pose, still_step, push_from = None, 0, None
    step = 0
    status = None
    while True:
        pose = state.pose
        if status is None:
            if is_docked(pose, real):
                status = EpisodeStatus.DOCKED
            elif step >= max_steps:
                status = EpisodeStatus.TIMEOUT
        if status is not None:
            if step % spl == 0:
                break
            cmd = VelocityCommand(0.0, 0.0)  # hold still until the next log tick
        else:
            prev_phase = phase_idx
            while phase_idx < 4 and phase_done(plan.phases[phase_idx], pose):
                phase_idx += 1
            if phase_idx != prev_phase:
                still_pose, push_from = None, None
            if phase_idx >= 4:
                # plan finished without meeting the docking thresholds: align in place
                cmd = rotate_command(pose, real.psi, dwa.w_max, cfg.rotate_gain, dwa.dt)
            else:
                phase = plan.phases[phase_idx]
                if phase.is_rotation:
                    cmd = rotate_command(pose, phase.target_heading, dwa.w_max, cfg.rotate_gain, dwa.dt)
                else:
                    if (
                        still_pose is None
                        or pose.distance_to(still_pose) > STALL_MOVE
                        or abs(angle_diff(pose.psi, still_pose.psi)) > STALL_TURN
                    ):
                        still_pose, still_step = pose, step
                    elif push_from is None and step - still_step >= stall_steps:
                        push_from = pose
                    if push_from is not None and pose.distance_to(push_from) >= PUSH_DISTANCE:
                        push_from, still_pose = None, None
                    scan = lidar_scan(world, pose, cfg.lidar_rays, cfg.lidar_max_range)
                    if push_from is None:
                        cmd = dwa_step(state, phase.target, scan, dwa)
                    else:
                        cmd = dwa_step(state, phase.target, scan, push_dwa, require_motion=True)
        if trace is not None:
            trace.poses.append(pose)
            trace.commands.append(cmd)
            trace.phases.append(phase_idx)
        state = step_kinematics(state, cmd, dwa.dt)
        step += 1
        if status is None and world.clearance(state.pose.x, state.pose.y) < dwa.robot_radius:
            status = EpisodeStatus.COLLISION
            state = RobotState(state.pose)
        if step % spl == 0:
            log.append((step // spl / cfg.log_hz, state.pose.relative_to(start)))

    gt = resample_trajectory(RawLog(log), cfg.Q)
    return EpisodeRecord(
        depth_ref="depth.pgm",
        intrinsics=cfg.camera,
        start_pose=start,
        station_pose=world.station.pose,
        gt_trajectory=gt,
        raw_log=tuple(log),
        rgb_ref=None,
        depth=depth,
        status=status,
        seed=cfg.seed,
        config=cfg,
        world=world,
    )


def resample_trajectory(log, Q: int = DEFAULT_Q) -> Trajectory:
    """Arc-length-uniform resampling of a pose log into ``Q`` waypoints.

    Positions are interpolated linearly, headings along the shortest arc.
    Where several samples share an arc length (turning in place) the latest
    heading wins; the first and last samples are kept exactly.
    """
    samples = log.samples if isinstance(log, RawLog) else tuple(log)
    if int(Q) != Q or Q < 2:
        raise InvalidArgumentError("Q must be an integer >= 2")
    if len(samples) < 2:
        raise InvalidArgumentError("log needs at least two samples")
    poses = [p for _, p in samples]
    xy = np.array([(p.x, p.y) for p in poses])
    psi = np.array([p.psi for p in poses])
    seg = np.hypot(*np.diff(xy, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total <= 0:
        p = poses[0]
        return Trajectory(np.tile([p.x, p.y], (Q, 1)), np.tile([math.cos(p.psi), math.sin(p.psi)], (Q, 1)))
    targets = total * np.arange(Q) / (Q - 1)
    pos = np.empty((Q, 2))
    head = np.empty(Q)
    n = len(poses)
    for k, st in enumerate(targets):
        i = int(np.searchsorted(s, st, side="right")) - 1
        i = min(max(i, 0), n - 2)
        ds = s[i + 1] - s[i]
        f = 0.0 if ds <= 0 else min(max((st - s[i]) / ds, 0.0), 1.0)
        pos[k] = xy[i] + f * (xy[i + 1] - xy[i])
        head[k] = psi[i] + f * angle_diff(psi[i + 1], psi[i])
    pos[0], head[0] = xy[0], psi[0]
    pos[-1], head[-1] = xy[-1], psi[-1]
    ori = np.stack([np.cos(head), np.sin(head)], axis=1)
    return Trajectory(pos, ori)


# ---------------------------------------------------------------- scenario generation

AXIS_CLEARANCE = 0.8
ANNULUS = (1.5, 5.0)
DEFAULT_BOUNDS = (-6.5, -6.5, 6.5, 6.5)


def _segment_distance(px, py, a, b):
    ax, ay = a
    bx, by = b
    vx, vy = bx - ax, by - ay
    t = ((px - ax) * vx + (py - ay) * vy) / (vx * vx + vy * vy)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(px - (ax + t * vx), py - (ay + t * vy))


def random_scenario(
    rng: np.random.Generator,
    n_obstacles: Optional[int] = None,
    max_obstacles: int = 4,
    standoff: float = 1.0,
    robot_radius: float = 0.35,
    bounds: tuple = DEFAULT_BOUNDS,
):
    """Sample a world and a collision-free start pose.

    The station sits at the origin facing +x. Starts are uniform over the
    1.5-5 m annulus around it with uniform heading. Obstacles (boxes and
    circles) stay 0.8 m clear of the docking axis and leave room around the
    start pose.
    """
    station = DockingStation(Pose2D(0.0, 0.0, 0.0))
    r = math.sqrt(rng.uniform(ANNULUS[0] ** 2, ANNULUS[1] ** 2))
    a = rng.uniform(-math.pi, math.pi)
    start = Pose2D(r * math.cos(a), r * math.sin(a), rng.uniform(-math.pi, math.pi))
    if n_obstacles is None:
        n_obstacles = int(rng.integers(0, max_obstacles + 1))
    real = (-station.dock_depth, 0.0)
    virt = (standoff - station.dock_depth, 0.0)
    xmin, ymin, xmax, ymax = bounds
    obstacles = []
    attempts = 0
    while len(obstacles) < n_obstacles and attempts < 1000:
        attempts += 1
        cx = rng.uniform(xmin + 0.5, xmax - 0.5)
        cy = rng.uniform(ymin + 0.5, ymax - 0.5)
        if rng.uniform() < 0.5:
            hx, hy = rng.uniform(0.15, 0.5, size=2)
            ob = Box(cx - hx, cy - hy, cx + hx, cy + hy)
        else:
            ob = Circle(cx, cy, rng.uniform(0.15, 0.5))
        # sample the footprint outline densely enough for the axis test
        pts = ob.outline()
        if np.min(_segment_distance(pts[:, 0], pts[:, 1], real, virt)) < AXIS_CLEARANCE:
            continue
        if ob.distance(real[0], real[1]) < AXIS_CLEARANCE or ob.distance(virt[0], virt[1]) < AXIS_CLEARANCE:
            continue
        if ob.distance(start.x, start.y) < robot_radius + 0.3:
            continue
        obstacles.append(ob)
    return World(bounds, tuple(obstacles), station), start
