"""Interference-free capture behind a field-sequential display.

The panel flips between visible and transparent states; the camera may
only expose while it is transparent. With 5.56 ms fields no single window
holds a 6 ms exposure, so the budget has to accumulate across windows.
The independent interference audit confirms nothing leaked into a visible
segment.
"""

from gazekit import (
    CameraTiming,
    interference_check,
    paper_drive,
    schedule_exposures,
    transparent_intervals,
)

drive = paper_drive()
print(f"drive cycle: {[(s, round(ms, 3)) for s, ms in drive.cycle]} "
      f"({drive.field_rate_hz:.0f} Hz fields, {drive.display_refresh_hz:.0f} Hz refresh)")
print("transparent windows in the first 40 ms:")
for a, b in transparent_intervals(drive, 40.0):
    print(f"  [{a:6.2f}, {b:6.2f}) ms")

single = schedule_exposures(
    drive, CameraTiming(fps=50.0, exposure_ms=6.0, allow_split=False), 200.0)
print(f"\n6 ms contiguous exposure: {len(single.violations)} of "
      f"{single.frame_count} frames infeasible")

split = schedule_exposures(
    drive, CameraTiming(fps=50.0, exposure_ms=6.0, allow_split=True), 200.0)
print(f"6 ms split exposure: {len(split.violations)} violations; "
      f"first frame uses windows {[tuple(round(x, 2) for x in w) for w in split.windows[0]]}")

audit = interference_check(split, drive)
print(f"independent interference audit: {len(audit)} overlaps with visible state")
