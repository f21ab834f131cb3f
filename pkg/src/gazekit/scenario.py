"""Closed-loop calibration scenarios with the simulated perceiver.

A scenario file pins everything needed for a deterministic end-to-end run:
rig, camera, plane, a perception distortion field, the training grid,
noise, and the random seed. The harness commands each grid point, asks the
simulated perceiver where it saw eye contact, records the pairs, fits a
correction, and validates on a held-out grid. Reports are canonical JSON,
byte-identical for identical inputs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import calibration as calib
from .camera import CameraIntrinsics, DistortionCoefficients, intrinsics_from_dict
from .errors import GazeEngineError
from .rig import rig_from_dict, two_eye_rig, fixate
from .scene import DisplaySpec, PAPER_DISPLAY, build_scene, pixel_to_fixation


def default_intrinsics() -> tuple[CameraIntrinsics, DistortionCoefficients]:
    "Reference camera: 1440x1080, ~60 degree horizontal field of view."
    return (
        CameraIntrinsics(fx=1250.0, fy=1250.0, cx=720.0, cy=540.0,
                         resolution=(1440, 1080)),
        DistortionCoefficients(),
    )


def grid_points(bounds, nx: int, ny: int, margin: float = 0.1) -> np.ndarray:
    """nx-by-ny grid over the plane, inset by a fractional margin per side."""
    w, h = bounds
    us = np.linspace(margin * w, (1.0 - margin) * w, nx)
    vs = np.linspace(margin * h, (1.0 - margin) * h, ny)
    return np.array([[u, v] for v in vs for u in us])


def midpoint_grid(bounds, nx: int, ny: int, margin: float = 0.1) -> np.ndarray:
    """Held-out grid at the cell centers of the training grid."""
    w, h = bounds
    us = np.linspace(margin * w, (1.0 - margin) * w, nx)
    vs = np.linspace(margin * h, (1.0 - margin) * h, ny)
    mu = (us[:-1] + us[1:]) / 2.0
    mv = (vs[:-1] + vs[1:]) / 2.0
    return np.array([[u, v] for v in mv for u in mu])


def load_scenario(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def run_scenario(spec: dict) -> dict:
    """Execute command -> perceive -> record -> fit -> validate.

    Returns the report dict; see write_report for canonical serialization.
    The report carries the failure stage when a step raises.
    """
    report = {"stage": "setup", "ok": False}
    try:
        if "intrinsics" in spec:
            intr, dist = intrinsics_from_dict(spec["intrinsics"])
        else:
            intr, dist = default_intrinsics()
        rig = rig_from_dict(spec["rig"]) if "rig" in spec else two_eye_rig()
        display = (DisplaySpec(physical_size=tuple(spec["display"]["physical_size_mm"]),
                               resolution=tuple(spec["display"]["resolution"]))
                   if "display" in spec else PAPER_DISPLAY)
        scene = build_scene(rig, display, intr, dist,
                            plane_distance_f=float(spec.get("plane_distance_mm", 1000.0)))

        field = calib.field_from_dict(spec.get("field", {"type": "identity"}))
        noise = float(spec.get("noise_sigma", 0.0))
        seed = int(spec.get("seed", 0))
        rng = np.random.default_rng(seed)
        gspec = spec.get("grid", {})
        nx, ny = int(gspec.get("nx", 5)), int(gspec.get("ny", 5))
        margin = float(gspec.get("margin", 0.1))
        bounds = tuple(float(v) for v in intr.resolution)

        report["stage"] = "collect"
        session = calib.CalibrationSession(plane_bounds=bounds, avatar_id="scenario")
        commanded = grid_points(bounds, nx, ny, margin)
        for point in commanded:
            # commanding the fixation exercises the full engine path even
            # though the perceiver only needs the pixel
            command = pixel_to_fixation(scene, point)
            fixate(rig, command.target)
            perceived = calib.simulate_perceiver(field, point, noise, rng)
            calib.record_pair(session, point, perceived, observer_id="sim", timestamp=0.0)

        report["stage"] = "fit"
        fit_spec = spec.get("fit", {})
        config = calib.FitConfig(
            max_degree=int(fit_spec.get("max_degree", 3)),
            selection_penalty=float(fit_spec.get("selection_penalty", 1e-6)),
            min_pairs=int(fit_spec.get("min_pairs", calib.DEFAULT_MIN_PAIRS)),
        )
        model = calib.fit_correction(session.pairs, config, avatar_id="scenario")

        report["stage"] = "validate"
        holdout = midpoint_grid(bounds, nx, ny, margin)
        pre = field.apply(holdout) - holdout
        pre_rms = float(np.sqrt(np.mean(np.sum(pre * pre, axis=1))))
        corrected = np.array([model.evaluate(q) for q in holdout])
        post = field.apply(corrected) - holdout
        post_rms = float(np.sqrt(np.mean(np.sum(post * post, axis=1))))

        report.update({
            "stage": "complete",
            "ok": True,
            "seed": seed,
            "noise_sigma": noise,
            "grid": {"nx": nx, "ny": ny, "margin": margin},
            "plane_bounds": list(bounds),
            "train_pre_rms": model.fit_stats["pre_rms"],
            "train_post_rms": model.fit_stats["post_rms"],
            "pre_rms": pre_rms,
            "post_rms": post_rms,
            "improvement": (1.0 - post_rms / pre_rms) if pre_rms > 0 else 0.0,
            "model": model.to_dict(),
            "per_point": [
                {"intended": [float(a) for a in q],
                 "residual": float(np.linalg.norm(r))}
                for q, r in zip(holdout, post)
            ],
        })
    except GazeEngineError as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
    return report


def write_report(path, report: dict) -> None:
    """Canonical serialization: sorted keys, fixed separators, newline."""
    Path(path).write_text(
        json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def run_scenario_file(scenario_path, report_path=None) -> dict:
    spec = load_scenario(scenario_path)
    report = run_scenario(spec)
    if report_path is not None:
        write_report(report_path, report)
    return report
