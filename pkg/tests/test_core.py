import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dockkit.core import (
    EpisodeRecord,
    OrientationVec,
    Pose2D,
    Trajectory,
    orientation_from_angle,
    wrap_angle,
    wrap_angles,
)
from dockkit.errors import InvalidArgumentError, ShapeError

def test_wrap_angle_examples():
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(3 * math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(7.0) == pytest.approx(7.0 - 2 * math.pi, abs=1e-15)
    assert wrap_angle(7.0) == pytest.approx(0.71681469282041, abs=1e-12)


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_wrap_angle_rejects_non_finite(bad):
    with pytest.raises(InvalidArgumentError):
        wrap_angle(bad)
    with pytest.raises(InvalidArgumentError):
        orientation_from_angle(bad)


@given(st.floats(min_value=-1e3, max_value=1e3, allow_nan=False))
def test_wrap_angle_properties(theta):
    w = wrap_angle(theta)
    assert -math.pi <= w <= math.pi
    assert abs(math.sin(w) - math.sin(theta)) <= 1e-12
    assert abs(math.cos(w) - math.cos(theta)) <= 1e-12


@given(st.floats(min_value=-1e3, max_value=1e3, allow_nan=False))
def test_vectorised_wrap_matches_scalar(theta):
    a, b = wrap_angles(np.array([theta]))[0], wrap_angle(theta)
    assert -math.pi <= a <= math.pi
    assert abs(math.remainder(a - b, 2 * math.pi)) <= 1e-12


def test_orientation_examples():
    o = orientation_from_angle(0.0)
    assert (o.c, o.s) == (1.0, 0.0)
    o = orientation_from_angle(math.pi / 2)
    assert o.c == pytest.approx(0.0, abs=1e-16) and o.s == 1.0
    o = orientation_from_angle(1.0)
    assert o.c == pytest.approx(0.5403023058681398, abs=1e-15)
    assert o.s == pytest.approx(0.8414709848078965, abs=1e-15)


@given(st.floats(min_value=-1e3, max_value=1e3, allow_nan=False))
def test_orientation_round_trip(psi):
    o = orientation_from_angle(psi)
    assert abs(o.c**2 + o.s**2 - 1) <= 1e-9
    rec = math.atan2(o.s, o.c)
    w = wrap_angle(psi)
    # +-pi are the same heading
    assert abs(rec - w) <= 1e-12 or abs(abs(rec - w) - 2 * math.pi) <= 1e-12


def test_orientation_vec_rejects_non_unit():
    with pytest.raises(InvalidArgumentError):
        OrientationVec(0.5, 0.5)


def test_pose_wraps_heading():
    assert Pose2D(0, 0, 3 * math.pi).psi == math.pi
    assert Pose2D(1, 2, 7.0).psi == pytest.approx(7.0 - 2 * math.pi)


def test_pose_compose_inverse(rng):
    for _ in range(50):
        a = Pose2D(*rng.uniform(-5, 5, 2), rng.uniform(-math.pi, math.pi))
        b = Pose2D(*rng.uniform(-5, 5, 2), rng.uniform(-math.pi, math.pi))
        back = a.compose(b.relative_to(a))
        assert back.x == pytest.approx(b.x, abs=1e-12)
        assert back.y == pytest.approx(b.y, abs=1e-12)
        assert math.cos(back.psi - b.psi) == pytest.approx(1.0, abs=1e-12)
        ident = a.relative_to(a)
        assert abs(ident.x) < 1e-12 and abs(ident.y) < 1e-12 and abs(math.sin(ident.psi)) < 1e-12


def test_trajectory_rejects_mismatched_lengths():
    with pytest.raises(ShapeError):
        Trajectory([[0, 0], [1, 0]], [[1, 0]])
    with pytest.raises(ShapeError):
        Trajectory(np.zeros((0, 2)), np.zeros((0, 2)))


def test_trajectory_rejects_non_unit_orientation():
    with pytest.raises(InvalidArgumentError):
        Trajectory([[0, 0]], [[0.5, 0.5]])


def test_trajectory_is_read_only():
    t = Trajectory([[0, 0], [1, 0]], [[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        t.positions[0, 0] = 3.0


def test_episode_record_requires_increasing_times():
    t = Trajectory([[0, 0], [1, 0]], [[1, 0], [1, 0]])
    p = Pose2D(0, 0, 0)
    with pytest.raises(InvalidArgumentError):
        EpisodeRecord("depth.pgm", None, p, p, t, [(0.0, p), (0.0, p)])
