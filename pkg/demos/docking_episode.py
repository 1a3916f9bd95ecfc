"""
One docking episode, step by step
=================================

Plan the rotate / approach / rotate / dock maneuver, then let the
simulator execute it with the proportional yaw loop and the DWA
controller while logging poses at 10 Hz.
"""

import math

from dockkit.core import Pose2D
from dockkit.planner import DockingStation, plan_vpg
from dockkit.sim import Circle, EpisodeConfig, EpisodeTrace, World, run_episode

station = DockingStation(Pose2D(0.0, 0.0, 0.0))
start = Pose2D(3.5, 1.5, -2.5)

plan = plan_vpg(start, station, standoff=1.0)
print(plan.to_text())

# %%
# A post sits on the straight line from the start to the virtual point.
# Plain DWA parks in front of it: standing still keeps the most clearance.
# After a second without progress the episode loop pushes the robot along
# the best moving admissible arc, which takes it around the post.
world = World((-6.0, -6.0, 6.0, 6.0), (Circle(2.3, 1.0, 0.25),), station)

trace = EpisodeTrace()
record = run_episode(world, EpisodeConfig(start), trace)
stalled = sum(1 for a, b in zip(trace.poses, trace.poses[1:]) if a.distance_to(b) < 1e-4)
print()
print("control steps without translation:", stalled)
print("status:", record.status, " duration: %.1f s" % record.duration)

# %%
# Time spent in each phase, from the full-rate trace.
names = ["Rotate", "Approach", "Rotate2", "Dock", "Align"]
for k, name in enumerate(names):
    n = sum(1 for p in trace.phases if p == k)
    if n:
        print("  %-8s %5.1f s" % (name, n * 0.1))

# %%
# The log lives in the start-pose frame; map the last sample back.
final = start.compose(record.raw_log[-1][1])
print("final pose: (%.3f, %.3f) heading %.1f deg" % (final.x, final.y, math.degrees(final.psi)))
print("waypoints in the resampled trajectory:", len(record.gt_trajectory))
