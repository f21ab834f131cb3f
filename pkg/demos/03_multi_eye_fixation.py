"""Any number of eyes, one fixation point.

A fixation is just a direction and a distance; each eye then rotates by
the unique shortest arc that puts its forward axis through the target.
Shown for a standard two-eye rig and a six-eye ring, plus the weighted
aggregate direction an onlooker would read from the ensemble.
"""

import numpy as np

from gazekit import (
    fixate,
    fixate_clamped,
    fixation_from_vector,
    recognized_gaze,
    ring_rig,
    two_eye_rig,
)

# Two eyes, 64 mm apart, fixating half a meter ahead: classic vergence.
rig = two_eye_rig(ipd_mm=64.0)
command = fixation_from_vector([0.0, 0.0, 1.0], 500.0, anchor=[0.0, 0.0, 0.0])
print("fixation target:", command.target)
for side, rot in zip(("left ", "right"), fixate(rig, command.target)):
    yaw = np.degrees(np.arctan2(rot.direction[0], rot.direction[2]))
    print(f"  {side} eye yaws {yaw:+.3f} degrees inward")

# Six eyes on a ring all converge on the same point; the residual distance
# from each gaze line to the target is numerically zero.
ring = ring_rig(6, radius_mm=40.0)
target = np.array([120.0, -60.0, 800.0])
rotations = fixate(ring, target)
worst = 0.0
for center, rot in zip(ring.eye_centers_world(), rotations):
    w = target - center
    miss = np.linalg.norm(np.cross(w, rot.direction))
    worst = max(worst, miss)
print(f"\nsix-eye ring: worst gaze-line miss {worst:.2e} mm")
print("aggregate direction:", np.round(recognized_gaze(ring, rotations), 4))

# Ask for something behind the avatar's shoulder and the limits kick in:
# clamped mode saturates and says which eyes gave up.
rotations, violations = fixate_clamped(rig, [2000.0, 0.0, 300.0])
for v in violations:
    print(f"eye {v.eye_index}: {v.axis} wanted {np.degrees(v.angle):+.1f} deg, "
          f"limit {np.degrees(v.limit):.1f} deg")
