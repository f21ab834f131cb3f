"""Field-sequential drive timing and interference-free exposure scheduling.

The display alternates between visible and transparent states; the camera
behind it may only integrate light while the panel is transparent. The
drive is modeled as an explicit repeating (state, duration) cycle so any
field pattern can be expressed; exposures are placed greedily
earliest-first inside the transparent windows of each camera frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

VISIBLE = "visible"
TRANSPARENT = "transparent"

_TIME_EPS = 1e-9  # ms


@dataclass(frozen=True)
class DriveConfig:
    """Repeating display drive cycle plus its nominal rates."""

    cycle: tuple[tuple[str, float], ...]
    display_refresh_hz: float = 50.0
    field_rate_hz: float = 180.0

    def __post_init__(self):
        cycle = tuple((str(state), float(ms)) for state, ms in self.cycle)
        if not cycle:
            raise ValueError("cycle may not be empty")
        for state, ms in cycle:
            if state not in (VISIBLE, TRANSPARENT):
                raise ValueError(f"unknown drive state {state!r}")
            if ms <= 0:
                raise ValueError("segment durations must be positive")
        if not any(state == TRANSPARENT for state, _ in cycle):
            raise ValueError("cycle needs at least one transparent segment")
        object.__setattr__(self, "cycle", cycle)

    @property
    def period_ms(self) -> float:
        return sum(ms for _, ms in self.cycle)

    @property
    def transparent_duty(self) -> float:
        t = sum(ms for state, ms in self.cycle if state == TRANSPARENT)
        return t / self.period_ms


@dataclass(frozen=True)
class CameraTiming:
    """Capture rate and per-frame exposure budget."""

    fps: float = 50.0
    exposure_ms: float = 6.0
    allow_split: bool = False

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.exposure_ms <= 0:
            raise ValueError("exposure must be positive")
        if self.exposure_ms > 1000.0 / self.fps + _TIME_EPS:
            raise ValueError("exposure cannot exceed the frame period")

    @property
    def frame_ms(self) -> float:
        return 1000.0 / self.fps


@dataclass(frozen=True)
class FrameViolation:
    frame: int
    required_ms: float
    achieved_ms: float
    reason: str


@dataclass(frozen=True)
class ExposureSchedule:
    """Per-frame exposure windows (absolute ms) and shortfall reports."""

    windows: tuple[tuple[tuple[float, float], ...], ...]
    exposure_per_frame: tuple[float, ...]
    violations: tuple[FrameViolation, ...]
    horizon_ms: float

    @property
    def frame_count(self) -> int:
        return len(self.windows)

    def all_windows(self):
        for frame in self.windows:
            yield from frame


def transparent_intervals(drive: DriveConfig, horizon_ms: float) -> list[tuple[float, float]]:
    """Transparent segments of the repeating cycle over [0, horizon), merged."""
    if horizon_ms <= 0:
        raise ValueError("horizon must be positive")
    intervals: list[tuple[float, float]] = []
    t = 0.0
    while t < horizon_ms - _TIME_EPS:
        for state, ms in drive.cycle:
            start, end = t, min(t + ms, horizon_ms)
            if state == TRANSPARENT and end > start + _TIME_EPS:
                if intervals and start <= intervals[-1][1] + _TIME_EPS:
                    intervals[-1] = (intervals[-1][0], end)
                else:
                    intervals.append((start, end))
            t += ms
            if t >= horizon_ms - _TIME_EPS:
                break
    return intervals


def _clip(intervals, lo, hi):
    out = []
    for a, b in intervals:
        a2, b2 = max(a, lo), min(b, hi)
        if b2 > a2 + _TIME_EPS:
            out.append((a2, b2))
    return out


def schedule_exposures(drive: DriveConfig, timing: CameraTiming,
                       horizon_ms: float) -> ExposureSchedule:
    """Place exposure windows inside the transparent intervals of each frame.

    Earliest-fit: without splitting, the exposure needs one contiguous
    transparent run of at least exposure_ms and goes at the start of the
    first such run. With splitting, exposure accumulates across windows in
    order until the budget is met. Frames that cannot reach the budget are
    reported as violations, never raised.
    """
    open_windows = transparent_intervals(drive, horizon_ms)
    frame_ms = timing.frame_ms
    n_frames = int(np.floor((horizon_ms + _TIME_EPS) / frame_ms))
    frames = []
    per_frame = []
    violations = []
    for k in range(n_frames):
        lo, hi = k * frame_ms, (k + 1) * frame_ms
        avail = _clip(open_windows, lo, hi)
        placed: list[tuple[float, float]] = []
        got = 0.0
        if timing.allow_split:
            for a, b in avail:
                if got >= timing.exposure_ms - _TIME_EPS:
                    break
                take = min(b - a, timing.exposure_ms - got)
                placed.append((a, a + take))
                got += take
        else:
            for a, b in avail:
                if b - a >= timing.exposure_ms - _TIME_EPS:
                    take = min(timing.exposure_ms, b - a)
                    placed.append((a, a + take))
                    got = take
                    break
        if got < timing.exposure_ms - _TIME_EPS:
            reason = ("no transparent time" if not avail
                      else "no contiguous transparent window long enough"
                      if not timing.allow_split
                      else "insufficient transparent time in frame")
            violations.append(FrameViolation(
                frame=k,
                required_ms=timing.exposure_ms,
                achieved_ms=got,
                reason=reason,
            ))
        frames.append(tuple(placed))
        per_frame.append(got)
    return ExposureSchedule(
        windows=tuple(frames),
        exposure_per_frame=tuple(per_frame),
        violations=tuple(violations),
        horizon_ms=float(horizon_ms),
    )


@dataclass(frozen=True)
class InterferenceViolation:
    frame: int
    window: tuple[float, float]
    visible_overlap_ms: float


def interference_check(schedule: ExposureSchedule, drive: DriveConfig) -> list[InterferenceViolation]:
    """Brute-force audit that every window avoids the visible state.

    Walks the raw drive cycle independently of the scheduler's bookkeeping
    and measures the overlap of each window with visible segments.
    """
    out = []
    for frame_idx, frame in enumerate(schedule.windows):
        for window in frame:
            overlap = _visible_overlap(drive, window[0], window[1])
            if overlap > 1e-6:
                out.append(InterferenceViolation(
                    frame=frame_idx,
                    window=(float(window[0]), float(window[1])),
                    visible_overlap_ms=float(overlap),
                ))
    return out


def _visible_overlap(drive: DriveConfig, start: float, end: float) -> float:
    period = drive.period_ms
    overlap = 0.0
    cycle_start = np.floor(start / period) * period
    t = cycle_start
    while t < end:
        for state, ms in drive.cycle:
            a, b = t, t + ms
            if state == VISIBLE:
                overlap += max(0.0, min(b, end) - max(a, start))
            t = b
            if t >= end:
                break
    return overlap


# ---------------------------------------------------------------------------
# Presets and files


def paper_drive() -> DriveConfig:
    """Alternating fields at the 180 Hz drive rate, 50 Hz display refresh."""
    field_ms = 1000.0 / 180.0
    return DriveConfig(
        cycle=((VISIBLE, field_ms), (TRANSPARENT, field_ms)),
        display_refresh_hz=50.0,
        field_rate_hz=180.0,
    )


def drive_to_dict(drive: DriveConfig) -> dict:
    return {
        "cycle": [[state, ms] for state, ms in drive.cycle],
        "display_refresh_hz": drive.display_refresh_hz,
        "field_rate_hz": drive.field_rate_hz,
    }


def drive_from_dict(data: dict) -> DriveConfig:
    return DriveConfig(
        cycle=tuple((seg[0], float(seg[1])) for seg in data["cycle"]),
        display_refresh_hz=float(data.get("display_refresh_hz", 50.0)),
        field_rate_hz=float(data.get("field_rate_hz", 180.0)),
    )


def load_drive(path) -> DriveConfig:
    with open(path, "r", encoding="utf-8") as f:
        return drive_from_dict(json.load(f))


def schedule_report(schedule: ExposureSchedule, drive: DriveConfig) -> dict:
    """JSON-ready summary combining the schedule and the independent audit."""
    interference = interference_check(schedule, drive)
    return {
        "frames": schedule.frame_count,
        "horizon_ms": schedule.horizon_ms,
        "exposure_per_frame_ms": list(schedule.exposure_per_frame),
        "violations": [
            {
                "frame": v.frame,
                "required_ms": v.required_ms,
                "achieved_ms": v.achieved_ms,
                "reason": v.reason,
            }
            for v in schedule.violations
        ],
        "interference": [
            {
                "frame": v.frame,
                "window_ms": list(v.window),
                "visible_overlap_ms": v.visible_overlap_ms,
            }
            for v in interference
        ],
        "ok": not schedule.violations and not interference,
    }
