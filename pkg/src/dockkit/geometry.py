"""Depth-camera geometry: cached back-projection, undistortion, uncertainty
propagation and point-cloud down-sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidIntrinsicsError,
    InvalidStateError,
    OutOfBoundsError,
    ShapeError,
)

DEFAULT_DEPTH_SCALE = 1000.0  # raw units per metre (millimetre depth)
DEFAULT_STRIDE = 5
UNDISTORT_ITERATIONS = 10


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics plus optional radial-tangential distortion.

    ``distortion`` follows the (k1, k2, p1, p2, k3) ordering.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    distortion: Optional[tuple] = None

    def __post_init__(self):
        vals = (self.fx, self.fy, self.cx, self.cy)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidIntrinsicsError("intrinsics must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidIntrinsicsError(f"focal lengths must be positive (fx={self.fx}, fy={self.fy})")
        if int(self.width) < 1 or int(self.height) < 1:
            raise InvalidIntrinsicsError("image size must be positive")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvalidIntrinsicsError(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height} image"
            )
        if self.distortion is not None:
            d = tuple(float(c) for c in self.distortion)
            if len(d) != 5:
                raise InvalidIntrinsicsError("distortion needs 5 coefficients (k1, k2, p1, p2, k3)")
            object.__setattr__(self, "distortion", d)

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def K_inv(self) -> np.ndarray:
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
            "distortion": list(self.distortion) if self.distortion is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        extra = set(d) - {"fx", "fy", "cx", "cy", "width", "height", "distortion"}
        if extra:
            raise InvalidArgumentError(f"unknown intrinsics keys: {sorted(extra)}")
        dist = d.get("distortion")
        return cls(
            float(d["fx"]),
            float(d["fy"]),
            float(d["cx"]),
            float(d["cy"]),
            int(d["width"]),
            int(d["height"]),
            tuple(dist) if dist is not None else None,
        )


def distort_normalized(x, y, coeffs):
    """Apply the radial-tangential model to normalised image coordinates."""
    k1, k2, p1, p2, k3 = coeffs
    r2 = x * x + y * y
    radial = 1.0 + k1 * r2 + k2 * r2 * r2 + k3 * r2 * r2 * r2
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return xd, yd


def undistort_pixels(intr: CameraIntrinsics, u, v):
    """Map distorted pixel coordinates to their undistorted positions.

    Fixed-point inversion of the distortion model, 10 iterations.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if intr.distortion is None:
        return u, v
    k1, k2, p1, p2, k3 = intr.distortion
    xd = (u - intr.cx) / intr.fx
    yd = (v - intr.cy) / intr.fy
    x, y = xd.copy(), yd.copy()
    for _ in range(UNDISTORT_ITERATIONS):
        r2 = x * x + y * y
        radial = 1.0 + k1 * r2 + k2 * r2 * r2 + k3 * r2 * r2 * r2
        dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
        dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
        x = (xd - dx) / radial
        y = (yd - dy) / radial
    return x * intr.fx + intr.cx, y * intr.fy + intr.cy


def pixel_grid(width: int, height: int) -> np.ndarray:
    """Homogeneous pixel grid as an (H*W, 3) array in row-major pixel order."""
    v, u = np.mgrid[0:height, 0:width]
    return np.stack([u.ravel(), v.ravel(), np.ones(width * height)], axis=1).astype(float)


@dataclass(frozen=True, eq=False)
class DirectionMatrix:
    """Per-pixel back-projection rays, one row per pixel (row-major)."""

    dirs: np.ndarray
    source_intrinsics: CameraIntrinsics
    distortion_applied: bool = False

    @property
    def width(self) -> int:
        return self.source_intrinsics.width

    @property
    def height(self) -> int:
        return self.source_intrinsics.height


def build_direction_matrix(intr: CameraIntrinsics, apply_undistortion: bool = False) -> DirectionMatrix:
    """Compute ``K^-1 [u, v, 1]^T`` for every pixel once so it can be reused.

    With ``apply_undistortion`` the pixel grid is first passed through the
    inverse distortion map; without coefficients the flag is a no-op.
    """
    if not isinstance(intr, CameraIntrinsics):
        raise InvalidIntrinsicsError("expected CameraIntrinsics")
    U = pixel_grid(intr.width, intr.height)
    applied = bool(apply_undistortion and intr.distortion is not None)
    if applied:
        uu, vv = undistort_pixels(intr, U[:, 0], U[:, 1])
        U = np.stack([uu, vv, np.ones_like(uu)], axis=1)
    dirs = U @ intr.K_inv.T
    dirs.setflags(write=False)
    return DirectionMatrix(dirs, intr, applied)


@dataclass(frozen=True, eq=False)
class DepthImage:
    """Raw integer depth, row-major, ``depth_scale`` units per metre."""

    data: np.ndarray
    width: int
    height: int
    depth_scale: float = DEFAULT_DEPTH_SCALE

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            if data.shape != (self.height, self.width):
                raise ShapeError(f"depth array {data.shape} != ({self.height}, {self.width})")
            data = data.ravel()
        if data.size != self.width * self.height:
            raise ShapeError(f"depth has {data.size} samples, expected {self.width * self.height}")
        if not self.depth_scale > 0:
            raise InvalidArgumentError("depth_scale must be positive")
        if data.dtype.kind not in "ui":
            if not np.all(data == np.round(data)):
                raise InvalidArgumentError("raw depth values must be integers")
        if np.any(data < 0) or np.any(data > 65535):
            raise InvalidArgumentError("raw depth values must lie in [0, 65535]")
        data = data.astype(np.uint16)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def as_array(self) -> np.ndarray:
        return self.data.reshape(self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, DepthImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.depth_scale == other.depth_scale
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None


CAMERA = "camera"
BODY = "body"


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    frame: str = CAMERA

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("point coordinates must be finite")
        if self.frame not in (CAMERA, BODY):
            raise InvalidArgumentError(f"unknown frame {self.frame!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


def stride_indices(width: int, height: int, stride: int) -> np.ndarray:
    """Row-major pixel indices kept by uniform sub-sampling with ``stride``."""
    if int(stride) != stride or stride < 1:
        raise InvalidArgumentError(f"stride must be a positive integer, got {stride!r}")
    rows = np.arange(0, height, stride)
    cols = np.arange(0, width, stride)
    return (rows[:, None] * width + cols[None, :]).ravel()


def backproject(dm: DirectionMatrix, depth: DepthImage, stride: int = DEFAULT_STRIDE) -> PointCloud:
    """Back-project sub-sampled depth through the cached direction matrix.

    Pixels with raw depth 0 carry no return and are dropped. Points keep
    pixel-index order.
    """
    if (depth.width, depth.height) != (dm.width, dm.height):
        raise ShapeError(
            f"depth image {depth.width}x{depth.height} does not match "
            f"direction matrix {dm.width}x{dm.height}"
        )
    idx = stride_indices(dm.width, dm.height, stride)
    raw = depth.data[idx]
    keep = raw > 0
    idx = idx[keep]
    z = raw[keep].astype(float) / depth.depth_scale
    return PointCloud(dm.dirs[idx] * z[:, None], CAMERA)


@dataclass(frozen=True, eq=False)
class ExtrinsicTransform:
    """Rigid camera-to-body transform ``x_B = R x + t``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float).reshape(-1)
        if R.shape != (3, 3) or t.shape != (3,):
            raise ShapeError("rotation must be 3x3 and translation a 3-vector")
        if not np.allclose(R.T @ R, np.eye(3), rtol=0.0, atol=1e-9):
            raise InvalidArgumentError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise InvalidArgumentError("rotation must have determinant +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "ExtrinsicTransform":
        return cls(np.eye(3), np.zeros(3))


def transform_to_body(cloud: PointCloud, ext: ExtrinsicTransform) -> PointCloud:
    if cloud.frame != CAMERA:
        raise InvalidStateError(f"cloud is already in the {cloud.frame!r} frame")
    return PointCloud(cloud.points @ ext.rotation.T + ext.translation, BODY)


@dataclass(frozen=True)
class DepthNoiseModel:
    sigma_d: float  # raw sensor units

    def __post_init__(self):
        if not self.sigma_d >= 0:
            raise InvalidArgumentError("sigma_d must be non-negative")


def propagate_uncertainty(
    intr: CameraIntrinsics,
    pixel,
    noise: DepthNoiseModel,
    depth_scale: float = DEFAULT_DEPTH_SCALE,
    apply_undistortion: bool = False,
) -> np.ndarray:
    """First-order 3x3 covariance of the back-projected point at ``pixel``.

    ``J = K^-1 u~ / depth_scale`` is the derivative of the point with respect
    to the raw depth reading, so the covariance is ``sigma_d^2 J J^T``.
    """
    u, v = pixel
    if not (0 <= u < intr.width and 0 <= v < intr.height):
        raise OutOfBoundsError(f"pixel ({u}, {v}) outside {intr.width}x{intr.height} image")
    if not depth_scale > 0:
        raise InvalidArgumentError("depth_scale must be positive")
    if apply_undistortion and intr.distortion is not None:
        uu, vv = undistort_pixels(intr, u, v)
        u, v = float(uu), float(vv)
    J = intr.K_inv @ np.array([u, v, 1.0], dtype=float) / depth_scale
    return noise.sigma_d**2 * np.outer(J, J)


def farthest_point_sample(cloud: PointCloud, m: int) -> PointCloud:
    """Greedy farthest-point subset of ``m`` points, seeded at index 0.

    Ties in the max-min distance go to the lowest index.
    """
    n = len(cloud)
    if int(m) != m or m < 0:
        raise InvalidArgumentError(f"m must be a non-negative integer, got {m!r}")
    if m > n:
        raise InvalidArgumentError(f"cannot sample {m} points from a cloud of {n}")
    pts = cloud.points
    if m == 0:
        return PointCloud(np.empty((0, 3)), cloud.frame)
    chosen = np.empty(m, dtype=int)
    chosen[0] = 0
    min_d2 = np.sum((pts - pts[0]) ** 2, axis=1)
    for k in range(1, m):
        nxt = int(np.argmax(min_d2))  # argmax returns the first maximum
        chosen[k] = nxt
        min_d2 = np.minimum(min_d2, np.sum((pts - pts[nxt]) ** 2, axis=1))
    return PointCloud(pts[chosen], cloud.frame)


def voxel_keys(points: np.ndarray, voxel_size: float) -> np.ndarray:
    return np.floor(points / voxel_size).astype(np.int64)


def voxel_downsample(cloud: PointCloud, voxel_size: float) -> PointCloud:
    """Replace the points in each occupied voxel by their centroid.

    Output is ordered by voxel key (lexicographic).
    """
    if not (voxel_size > 0 and math.isfinite(voxel_size)):
        raise InvalidArgumentError(f"voxel size must be positive, got {voxel_size!r}")
    if len(cloud) == 0:
        return cloud
    keys = voxel_keys(cloud.points, voxel_size)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    sums = np.zeros((counts.size, 3))
    np.add.at(sums, inverse, cloud.points)
    return PointCloud(sums / counts[:, None], cloud.frame)
