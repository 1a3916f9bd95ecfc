"""Episode archives: meta JSON, 16-bit PGM depth, CSV logs and trajectories.

Layout of one episode directory::

    meta.json        intrinsics, poses, config, world, seed, status
    depth.pgm        P5, maxval 65535, big-endian samples
    raw_log.csv      index,t_s,x_m,y_m,cos_psi,sin_psi
    trajectory.csv   index,x_m,y_m,cos_psi,sin_psi

A dataset is a directory of episode directories plus ``index.csv``
(``episode_id,path,status``).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import EpisodeRecord, EpisodeStatus, Pose2D, Trajectory
from .errors import (
    CorruptArchiveError,
    DockkitError,
    InvalidArgumentError,
    MissingComponentError,
    ParseError,
)
from .geometry import DEFAULT_DEPTH_SCALE, CameraIntrinsics, DepthImage

FORMAT = "dockkit-episode"
VERSION = 1
META = "meta.json"
DEPTH = "depth.pgm"
RAW_LOG = "raw_log.csv"
TRAJECTORY = "trajectory.csv"
INDEX = "index.csv"

TRAJ_COLUMNS = ["index", "x_m", "y_m", "cos_psi", "sin_psi"]
LOG_COLUMNS = ["index", "t_s", "x_m", "y_m", "cos_psi", "sin_psi"]
INDEX_COLUMNS = ["episode_id", "path", "status"]


def fmt_real(x: float) -> str:
    return "%.9g" % x


# ---------------------------------------------------------------- PGM


def write_pgm(path, image: DepthImage) -> None:
    header = f"P5\n{image.width} {image.height}\n65535\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(image.data.astype(">u2").tobytes())


def _pgm_tokens(buf: bytes, count: int, path):
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ParseError("truncated PGM header", path, 1)
        tokens.append(buf[start:pos])
    return tokens, pos + 1  # one whitespace byte separates header and raster


def read_pgm(path, depth_scale: float = DEFAULT_DEPTH_SCALE) -> DepthImage:
    """Read a binary PGM (8- or 16-bit) as a depth image."""
    buf = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(buf, 4, path)
    if tokens[0] != b"P5":
        raise ParseError(f"not a binary PGM (magic {tokens[0]!r})", path, 1)
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ParseError(f"bad PGM header: {exc}", path, 2) from None
    if w < 1 or h < 1 or not 0 < maxval <= 65535:
        raise ParseError(f"bad PGM geometry {w}x{h} maxval {maxval}", path, 2)
    dtype = ">u2" if maxval > 255 else "u1"
    need = w * h * np.dtype(dtype).itemsize
    raster = buf[offset : offset + need]
    if len(raster) != need:
        raise ParseError(f"PGM raster has {len(raster)} bytes, expected {need}", path)
    data = np.frombuffer(raster, dtype=dtype).astype(np.uint16)
    return DepthImage(data, w, h, depth_scale)


# ---------------------------------------------------------------- CSV


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(columns)
        wr.writerows(rows)


def _read_csv(path, columns) -> list[list[float]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != columns:
        raise CorruptArchiveError(f"{Path(path).name}: expected header {','.join(columns)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(columns):
            raise CorruptArchiveError(f"{Path(path).name}:{lineno}: expected {len(columns)} fields")
        try:
            vals = [float(v) for v in row]
        except ValueError:
            raise CorruptArchiveError(f"{Path(path).name}:{lineno}: non-numeric field") from None
        if int(vals[0]) != lineno - 2:
            raise CorruptArchiveError(f"{Path(path).name}:{lineno}: index out of sequence")
        out.append(vals)
    return out


def trajectory_rows(traj: Trajectory):
    return [
        [str(i), fmt_real(x), fmt_real(y), fmt_real(c), fmt_real(s)]
        for i, ((x, y), (c, s)) in enumerate(zip(traj.positions, traj.orientations))
    ]


def write_trajectory_csv(path, traj: Trajectory) -> None:
    _write_csv(path, TRAJ_COLUMNS, trajectory_rows(traj))


def read_trajectory_csv(path) -> Trajectory:
    rows = _read_csv(path, TRAJ_COLUMNS)
    if not rows:
        raise CorruptArchiveError(f"{Path(path).name}: no waypoints")
    a = np.array(rows)
    try:
        return Trajectory(a[:, 1:3], a[:, 3:5])
    except InvalidArgumentError as exc:
        raise CorruptArchiveError(f"{Path(path).name}: {exc}") from None


def _pose_dict(p: Pose2D) -> dict:
    return {"x": p.x, "y": p.y, "psi": p.psi}


def _pose_from(d) -> Pose2D:
    return Pose2D(d["x"], d["y"], d["psi"])


# ---------------------------------------------------------------- episodes


def episode_meta(record: EpisodeRecord) -> dict:
    depth_scale = record.depth.depth_scale if record.depth is not None else DEFAULT_DEPTH_SCALE
    return {
        "format": FORMAT,
        "version": VERSION,
        "source": record.source,
        "status": record.status,
        "seed": record.seed,
        "depth_ref": record.depth_ref,
        "rgb_ref": record.rgb_ref,
        "depth_scale": depth_scale,
        "intrinsics": record.intrinsics.to_dict(),
        "start_pose": _pose_dict(record.start_pose),
        "station_pose": _pose_dict(record.station_pose),
        "q_points": len(record.gt_trajectory),
        "duration_s": record.duration,
        "config": record.config.to_dict() if record.config is not None else None,
        "world": record.world.to_dict() if record.world is not None else None,
    }


def write_episode(record: EpisodeRecord, directory) -> dict:
    """Write one archive; returns a manifest of the written files."""
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
        meta = episode_meta(record)
        with open(d / META, "w") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")
        files = [META]
        if record.depth is not None:
            write_pgm(d / record.depth_ref, record.depth)
            files.append(record.depth_ref)
        log_rows = [
            [str(i), fmt_real(t), fmt_real(p.x), fmt_real(p.y), fmt_real(math.cos(p.psi)), fmt_real(math.sin(p.psi))]
            for i, (t, p) in enumerate(record.raw_log)
        ]
        _write_csv(d / RAW_LOG, LOG_COLUMNS, log_rows)
        write_trajectory_csv(d / TRAJECTORY, record.gt_trajectory)
        files += [RAW_LOG, TRAJECTORY]
    except OSError as exc:
        raise DockkitError(f"cannot write episode to {d}: {exc}") from exc
    return {"directory": str(d), "files": files, "status": record.status, "q_points": len(record.gt_trajectory)}


def read_episode(directory) -> EpisodeRecord:
    """Load and validate an archive written by :func:`write_episode`."""
    from .sim import EpisodeConfig, World, resample_trajectory  # circular at import time

    d = Path(directory)
    meta_path = d / META
    if not meta_path.is_file():
        raise MissingComponentError(META, d)
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptArchiveError(f"{META}:{exc.lineno}: {exc.msg}") from None
    if meta.get("format") != FORMAT:
        raise CorruptArchiveError(f"{META}: not a {FORMAT} archive")
    depth_ref = meta.get("depth_ref") or DEPTH
    for name in (depth_ref, RAW_LOG, TRAJECTORY):
        if not (d / name).is_file():
            raise MissingComponentError(name, d)
    try:
        intr = CameraIntrinsics.from_dict(meta["intrinsics"])
        depth = read_pgm(d / depth_ref, float(meta["depth_scale"]))
        if (depth.width, depth.height) != (intr.width, intr.height):
            raise CorruptArchiveError("depth image size does not match the intrinsics")
        log_rows = _read_csv(d / RAW_LOG, LOG_COLUMNS)
        raw_log = tuple((r[1], Pose2D(r[2], r[3], math.atan2(r[5], r[4]))) for r in log_rows)
        for i, r in enumerate(log_rows):
            if abs(r[4] * r[4] + r[5] * r[5] - 1.0) > 1e-6:
                raise CorruptArchiveError(f"{RAW_LOG}:{i + 2}: orientation is not unit norm")
        gt = read_trajectory_csv(d / TRAJECTORY)
        if len(gt) != meta["q_points"]:
            raise CorruptArchiveError(f"{TRAJECTORY}: {len(gt)} rows, meta says {meta['q_points']}")
        if len(raw_log) >= 2:
            check = resample_trajectory(raw_log, len(gt))
            if np.max(np.abs(check.positions - gt.positions)) > 1e-6:
                raise CorruptArchiveError(f"{TRAJECTORY}: does not match the resampled raw log")
        cfg = EpisodeConfig.from_dict(meta["config"]) if meta.get("config") is not None else None
        world = World.from_dict(meta["world"]) if meta.get("world") is not None else None
        return EpisodeRecord(
            depth_ref=depth_ref,
            intrinsics=intr,
            start_pose=_pose_from(meta["start_pose"]),
            station_pose=_pose_from(meta["station_pose"]),
            gt_trajectory=gt,
            raw_log=raw_log,
            rgb_ref=meta.get("rgb_ref"),
            depth=depth,
            status=meta["status"],
            seed=int(meta["seed"]),
            config=cfg,
            world=world,
            source=meta.get("source", "rule_based"),
        )
    except CorruptArchiveError:
        raise
    except ParseError as exc:
        raise CorruptArchiveError(str(exc)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptArchiveError(f"{d}: {type(exc).__name__}: {exc}") from None


# ---------------------------------------------------------------- datasets


def episode_id(i: int) -> str:
    return f"ep{i:05d}"


def write_index(directory, entries: Iterable[tuple]) -> Path:
    path = Path(directory) / INDEX
    _write_csv(path, INDEX_COLUMNS, [list(e) for e in entries])
    return path


def read_index(directory) -> list[tuple[str, str, str]]:
    path = Path(directory) / INDEX
    if not path.is_file():
        raise MissingComponentError(INDEX, directory)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != INDEX_COLUMNS:
        raise CorruptArchiveError(f"{INDEX}: expected header {','.join(INDEX_COLUMNS)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3 or row[2] not in EpisodeStatus.ALL:
            raise CorruptArchiveError(f"{INDEX}:{lineno}: malformed entry")
        out.append(tuple(row))
    return out


def write_dataset(records, directory) -> list[tuple[str, str, str]]:
    """Write episodes as ``ep00000/...`` plus the index; returns the index rows."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, rec in enumerate(records):
        eid = episode_id(i)
        write_episode(rec, d / eid)
        entries.append((eid, eid, rec.status))
    write_index(d, entries)
    return entries


# ---------------------------------------------------------------- worlds


def load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno) from None


def write_world(world, path) -> None:
    with open(path, "w") as f:
        json.dump(world.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def read_world(path):
    from .sim import World

    try:
        return World.from_dict(load_json(path))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"invalid world description: {exc}", path) from None


def read_intrinsics(path) -> CameraIntrinsics:
    try:
        return CameraIntrinsics.from_dict(load_json(path))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"invalid intrinsics: {exc}", path) from None
