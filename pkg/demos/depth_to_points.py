"""
From a depth image to a point cloud
===================================

Render a synthetic depth frame, back-project it through a cached ray
table, move the points into the robot body frame and thin them out.
"""

import numpy as np

from dockkit.core import Pose2D
from dockkit.geometry import (
    DepthNoiseModel,
    backproject,
    build_direction_matrix,
    farthest_point_sample,
    propagate_uncertainty,
    transform_to_body,
    voxel_downsample,
)
from dockkit.planner import DockingStation
from dockkit.sim import Box, Circle, World, camera_extrinsic, default_camera, render_depth

# A small room with two obstacles and the station at the origin.
world = World(
    (-4.0, -4.0, 4.0, 4.0),
    (Box(1.5, -1.0, 2.0, -0.4), Circle(2.5, 1.0, 0.3)),
    DockingStation(Pose2D(0.0, 0.0, 0.0)),
)
pose = Pose2D(-1.0, 0.0, 0.0)

intr = default_camera()
depth = render_depth(world, pose, intr)
raw = depth.as_array()
print("depth frame", raw.shape, "valid pixels:", int(np.count_nonzero(raw)))

# %%
# The ray table only depends on the intrinsics, so it is built once and
# reused for every frame from the same camera.
rays = build_direction_matrix(intr)
cloud = backproject(rays, depth, stride=2)
print("camera-frame points:", len(cloud))

body = transform_to_body(cloud, camera_extrinsic(0.3))
print("height range in body frame: %.3f .. %.3f m" % (body.points[:, 2].min(), body.points[:, 2].max()))

# %%
# Two ways to thin the cloud out.
sparse = farthest_point_sample(body, 256)
grid = voxel_downsample(body, 0.1)
print("farthest-point subset:", len(sparse), " voxel centroids:", len(grid))

# %%
# Depth noise grows along the pixel ray: covariance is sigma^2 J J^T.
cov = propagate_uncertainty(intr, (100, 30), DepthNoiseModel(sigma_d=4.0))
print("per-point covariance at pixel (100, 30):")
print(np.array2string(cov, precision=3))
