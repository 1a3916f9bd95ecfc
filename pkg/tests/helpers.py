"""Shared comparison helpers for archive round trips."""

import math

import numpy as np

# 9 significant digits: relative error below 5e-9 after a text round trip
TEXT_RTOL = 5e-9


def close(a, b, rtol=TEXT_RTOL, atol=1e-15):
    return abs(a - b) <= atol + rtol * max(abs(a), abs(b))


def poses_close(p, q):
    # headings go through cos/sin on disk; compare them on the circle
    return close(p.x, q.x) and close(p.y, q.y) and abs(math.remainder(p.psi - q.psi, 2 * math.pi)) <= 1e-8


def records_match(a, b):
    """Exact equality for integers and strings, text-precision equality for reals."""
    problems = []
    for name in ("depth_ref", "rgb_ref", "status", "seed", "source"):
        if getattr(a, name) != getattr(b, name):
            problems.append(name)
    if a.intrinsics != b.intrinsics:
        problems.append("intrinsics")
    if a.depth != b.depth:
        problems.append("depth")
    for name in ("start_pose", "station_pose"):
        if not poses_close(getattr(a, name), getattr(b, name)):
            problems.append(name)
    if len(a.raw_log) != len(b.raw_log):
        problems.append("raw_log length")
    else:
        for (ta, pa), (tb, pb) in zip(a.raw_log, b.raw_log):
            if not (close(ta, tb) and poses_close(pa, pb)):
                problems.append("raw_log")
                break
    ga, gb = a.gt_trajectory, b.gt_trajectory
    if len(ga) != len(gb) or not (
        np.allclose(ga.positions, gb.positions, rtol=TEXT_RTOL, atol=1e-15)
        and np.allclose(ga.orientations, gb.orientations, rtol=TEXT_RTOL, atol=1e-15)
    ):
        problems.append("gt_trajectory")
    if (a.config is None) != (b.config is None) or (a.config is not None and a.config != b.config):
        problems.append("config")
    if (a.world is None) != (b.world is None) or (a.world is not None and a.world != b.world):
        problems.append("world")
    return problems


def tree_bytes(root):
    """Relative path -> file bytes for every file under ``root``."""
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


# criterion number -> (passed, one-line description); filled by test_acceptance
ACCEPTANCE: dict = {}


def report(num, ok, line):
    ACCEPTANCE[num] = (bool(ok), line)
    print(f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {line}")
    assert ok, line
