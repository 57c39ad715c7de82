"""
Oriented-box collision checks
=============================

Collision metrics place an ego-sized box at every planned waypoint and
test it against ground-truth object boxes with the separating-axis rule.
The signed margin tells how decisive each verdict is.
"""

import math

from lmplan import (
    ObjectBox,
    Trajectory,
    Waypoint,
    collision_steps,
    ego_boxes_along,
    obb_intersects,
    sat_margin,
)

A = ObjectBox(Waypoint(0.0, 0.0), 0.0, 4.0, 2.0)

# (1) Margins: negative means overlap, zero means touching, positive is
#     the separation distance along the best separating axis.
cases = [
    ("identical", ObjectBox(Waypoint(0.0, 0.0), 0.0, 4.0, 2.0)),
    ("touching faces", ObjectBox(Waypoint(4.0, 0.0), 0.0, 4.0, 2.0)),
    ("clear gap", ObjectBox(Waypoint(7.5, 0.0), 0.0, 4.0, 2.0)),
    ("rotated corner", ObjectBox(Waypoint(2.9, 1.1), math.pi / 4, 4.0, 2.0)),
]
for name, b in cases:
    print(f"{name:15s} margin {sat_margin(A, b):+8.3f} intersects {obb_intersects(A, b)}")

# (2) Ego boxes along a plan inherit the local path heading.
plan = Trajectory(tuple(Waypoint(0.5 * i, 2.0 * i) for i in range(1, 7)))
for box in ego_boxes_along(plan)[:3]:
    print(f"ego box at ({box.center.x:.2f},{box.center.y:.2f}) heading {box.heading:.3f} rad")

# (3) Per-step collision flags against ground-truth boxes: one obstacle
#     sits on the path at step 4, nothing else is around.
gt_boxes = tuple(
    (ObjectBox(Waypoint(2.0, 8.0), 0.0, 1.0, 1.0),) if step == 3 else ()
    for step in range(6)
)
print("collision flags:", collision_steps(plan, gt_boxes))
