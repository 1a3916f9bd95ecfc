"""Command-line entry point: ``dockkit {gen,eval,plot,backproject,plan}``.

Exit codes: 0 success, 2 validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import dataset
from .core import EpisodeStatus, Pose2D
from .errors import DockkitError, InvalidArgumentError, MissingComponentError, ParseError
from .geometry import (
    backproject,
    build_direction_matrix,
    farthest_point_sample,
    voxel_downsample,
)
from .metrics import KinematicLimits, evaluate, format_summary, summarize
from .planner import DockingStation, plan_vpg
from .sim import random_scenario, run_episode

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3

DWA_FLAGS = {
    "v_max": float,
    "v_min": float,
    "w_max": float,
    "a_v": float,
    "a_w": float,
    "dt": float,
    "horizon": float,
    "samples_v": int,
    "samples_w": int,
    "robot_radius": float,
    "safety_margin": float,
}


class EmptyInputError(InvalidArgumentError):
    pass


def _resolved(args) -> dict:
    overrides = {
        "seed": args.seed,
        "episodes": getattr(args, "episodes", None),
        "out": getattr(args, "out", None),
        "vpg.standoff": args.standoff,
        "simulator.q_points": args.q_points,
    }
    for name in DWA_FLAGS:
        overrides[f"dwa.{name}"] = getattr(args, f"dwa_{name}")
    return cfgmod.resolve(cfgmod.load(args.config), overrides)


# ---------------------------------------------------------------- gen


def _gen_one(tree: dict, i: int):
    rng = np.random.default_rng([tree["seed"], i])
    sim = tree["simulator"]
    world, start = random_scenario(
        rng,
        max_obstacles=sim["max_obstacles"],
        standoff=tree["vpg"]["standoff"],
        robot_radius=tree["dwa"]["robot_radius"],
        bounds=tuple(sim["bounds"]),
    )
    ep_cfg = cfgmod.episode_template(tree, start, seed=i)
    try:
        return run_episode(world, ep_cfg)
    except DockkitError as exc:
        raise DockkitError(f"episode {i}: {exc}") from exc


def cmd_gen(tree: dict, jobs: int = 1, out=None) -> list:
    """Generate, run and archive ``tree['episodes']`` seeded episodes."""
    out = Path(out or tree["out"])
    out.mkdir(parents=True, exist_ok=True)
    n = tree["episodes"]
    if jobs > 1 and n > 1:
        with ProcessPoolExecutor(jobs) as pool:
            records = list(pool.map(_gen_one, [tree] * n, range(n)))
    else:
        records = [_gen_one(tree, i) for i in range(n)]
    entries = dataset.write_dataset(records, out)
    counts = Counter(status for _, _, status in entries)
    print(f"wrote {n} episodes to {out}")
    for status in EpisodeStatus.ALL:
        print(f"  {status:<10} {counts.get(status, 0)}")
    return entries


# ---------------------------------------------------------------- eval


def _prediction_path(pred_dir: Path, eid: str):
    for cand in (pred_dir / eid / dataset.TRAJECTORY, pred_dir / f"{eid}.csv"):
        if cand.is_file():
            return cand
    return None


def _prediction_ids(pred_dir: Path) -> set:
    ids = {p.name for p in pred_dir.iterdir() if (p / dataset.TRAJECTORY).is_file()}
    ids |= {p.stem for p in pred_dir.glob("*.csv") if p.name != dataset.INDEX}
    return ids


def cmd_eval(pred_dir, gt_dir, tree: dict, out=None) -> dict:
    """Evaluate predicted trajectories against the Docked episodes of a dataset."""
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    if not pred_dir.is_dir() or not _prediction_ids(pred_dir):
        raise EmptyInputError(f"no predicted trajectories found in {pred_dir}")
    index = dataset.read_index(gt_dir)
    docked = [(eid, path) for eid, path, status in index if status == EpisodeStatus.DOCKED]
    if not docked:
        raise EmptyInputError(f"{gt_dir} holds no Docked episodes to evaluate against")
    missing = [eid for eid, _ in docked if _prediction_path(pred_dir, eid) is None]
    extra = sorted(_prediction_ids(pred_dir) - {eid for eid, _, _ in index})
    if missing or extra:
        lines = [f"  missing prediction for {eid}" for eid in missing]
        lines += [f"  prediction {eid} has no ground-truth episode" for eid in extra]
        raise InvalidArgumentError("unmatched episodes:\n" + "\n".join(lines))
    margin = tree["eval"]["kinematic_margin"]
    reports = []
    for eid, path in docked:
        rec = dataset.read_episode(gt_dir / path)
        pred = dataset.read_trajectory_csv(_prediction_path(pred_dir, eid))
        limits = KinematicLimits.from_dwa(rec.config.dwa, margin) if rec.config else None
        radius = rec.config.dwa.robot_radius if rec.config else tree["dwa"]["robot_radius"]
        reports.append(
            evaluate(pred, rec.gt_trajectory, rec.world, limits, rec.duration, rec.start_pose, radius, eid)
        )
    summary = summarize(reports)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "reports.jsonl", "w") as f:
            for r in reports:
                f.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
        with open(out / "summary.json", "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
    print(format_summary(summary))
    return summary


# ---------------------------------------------------------------- plot


def _episode_dirs(path: Path):
    if (path / dataset.META).is_file():
        return [(path.name, path)]
    return [(eid, path / rel) for eid, rel, _ in dataset.read_index(path)]


def cmd_plot(source, out, pred_dir=None) -> list:
    """Emit path and obstacle-outline CSVs per episode, in the start-pose frame."""
    source, out = Path(source), Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for eid, d in _episode_dirs(source):
        rec = dataset.read_episode(d)
        rows = [["gt", i, dataset.fmt_real(x), dataset.fmt_real(y)] for i, (x, y) in enumerate(rec.gt_trajectory.positions)]
        if pred_dir is not None:
            p = _prediction_path(Path(pred_dir), eid)
            if p is not None:
                pred = dataset.read_trajectory_csv(p)
                rows += [["pred", i, dataset.fmt_real(x), dataset.fmt_real(y)] for i, (x, y) in enumerate(pred.positions)]
        paths_file = out / f"{eid}_paths.csv"
        with open(paths_file, "w", newline="") as f:
            wr = csv.writer(f, lineterminator="\n")
            wr.writerow(["series", "index", "x_m", "y_m"])
            wr.writerows(rows)
        inv = rec.start_pose.inverse()
        c, s = math.cos(inv.psi), math.sin(inv.psi)
        obs_rows = []
        obstacles = rec.world.obstacles if rec.world is not None else ()
        for k, ob in enumerate(obstacles):
            for j, (x, y) in enumerate(ob.outline()):
                lx, ly = inv.x + c * x - s * y, inv.y + s * x + c * y
                obs_rows.append([k, j, dataset.fmt_real(lx), dataset.fmt_real(ly)])
        obs_file = out / f"{eid}_obstacles.csv"
        with open(obs_file, "w", newline="") as f:
            wr = csv.writer(f, lineterminator="\n")
            wr.writerow(["obstacle", "vertex", "x_m", "y_m"])
            wr.writerows(obs_rows)
        written += [paths_file, obs_file]
    return written


# ---------------------------------------------------------------- geometry / plan


def cmd_backproject(depth_file, intrinsics_file, out, stride=5, depth_scale=1000.0, undistort=False, fps=None, voxel=None):
    intr = dataset.read_intrinsics(intrinsics_file)
    depth = dataset.read_pgm(depth_file, depth_scale)
    dm = build_direction_matrix(intr, apply_undistortion=undistort)
    cloud = backproject(dm, depth, stride)
    if fps is not None:
        cloud = farthest_point_sample(cloud, min(fps, len(cloud)))
    if voxel is not None:
        cloud = voxel_downsample(cloud, voxel)
    np.savetxt(out, cloud.points, fmt="%.9g", header="x_m y_m z_m (camera frame)")
    print(f"wrote {len(cloud)} points to {out}")
    return cloud


def cmd_plan(robot, station, standoff=1.0, dock_depth=0.0) -> str:
    plan = plan_vpg(Pose2D(*robot), DockingStation(Pose2D(*station), dock_depth), standoff)
    text = plan.to_text()
    print(text)
    return text


# ---------------------------------------------------------------- argparse


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help=f"JSON config file (default: ${cfgmod.ENV_VAR})")
    p.add_argument("--seed", type=int)
    p.add_argument("--standoff", type=float)
    p.add_argument("--q-points", type=int)
    p.add_argument("--print-config", action="store_true", help="dump the resolved config and exit")
    g = p.add_argument_group("DWA overrides")
    for name, typ in DWA_FLAGS.items():
        g.add_argument(f"--{name.replace('_', '-')}", dest=f"dwa_{name}", type=typ)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dockkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a docking dataset")
    _common(g)
    g.add_argument("--episodes", type=int)
    g.add_argument("--out")
    g.add_argument("--jobs", type=int, default=1)

    e = sub.add_parser("eval", help="evaluate predicted trajectories")
    _common(e)
    e.add_argument("pred_dir")
    e.add_argument("gt_dir")
    e.add_argument("--out")

    pl = sub.add_parser("plot", help="emit plot-ready CSVs")
    _common(pl)
    pl.add_argument("source", help="dataset directory or single episode directory")
    pl.add_argument("--pred")
    pl.add_argument("--out", required=True)

    b = sub.add_parser("backproject", help="depth PGM to point cloud")
    _common(b)
    b.add_argument("depth_file")
    b.add_argument("intrinsics_file")
    b.add_argument("--out", required=True)
    b.add_argument("--stride", type=int, default=5)
    b.add_argument("--depth-scale", type=float, default=1000.0)
    b.add_argument("--undistort", action="store_true")
    b.add_argument("--fps", type=int)
    b.add_argument("--voxel", type=float)

    p = sub.add_parser("plan", help="print the VPG plan for a robot/station pair")
    _common(p)
    p.add_argument("--robot", type=float, nargs=3, metavar=("X", "Y", "PSI"), required=True)
    p.add_argument("--station", type=float, nargs=3, metavar=("X", "Y", "PSI"), required=True)
    p.add_argument("--dock-depth", type=float, default=0.0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tree = _resolved(args)
        if args.print_config:
            print(cfgmod.dumps(tree))
            return EXIT_OK
        if args.command == "gen":
            cmd_gen(tree, args.jobs)
        elif args.command == "eval":
            cmd_eval(args.pred_dir, args.gt_dir, tree, args.out)
        elif args.command == "plot":
            cmd_plot(args.source, args.out, args.pred)
        elif args.command == "backproject":
            cmd_backproject(
                args.depth_file,
                args.intrinsics_file,
                args.out,
                args.stride,
                args.depth_scale,
                args.undistort,
                args.fps,
                args.voxel,
            )
        elif args.command == "plan":
            cmd_plan(args.robot, args.station, tree["vpg"]["standoff"], args.dock_depth)
    except (InvalidArgumentError, ParseError, MissingComponentError) as exc:
        print(f"dockkit: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DockkitError, OSError) as exc:
        print(f"dockkit: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
