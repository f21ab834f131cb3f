"""Command-line entry points.

Exit codes: 0 success, 1 domain error, 2 usage error. All results go to
stdout as JSON or to files named by the caller.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

from . import calibration as calib
from . import scenario as scenario_mod
from . import scheduler as sched
from . import service as service_mod
from .camera import load_intrinsics, read_correspondences_csv, save_intrinsics
from .errors import ExtrapolationWarning, GazeEngineError
from .intrinsics_fit import fit_intrinsics
from .pnp import FixedDepth
from .rig import fixate_clamped, load_rig, recognized_gaze, two_eye_rig
from .scene import PAPER_DISPLAY, DisplaySpec, build_scene, pixel_to_fixation


def _emit(data: dict, out_path=None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _cmd_intrinsics_fit(args) -> int:
    views = [read_correspondences_csv(p) for p in args.views]
    intr, dist, rms = fit_intrinsics(views, resolution=(args.width, args.height))
    if args.out:
        save_intrinsics(args.out, intr, dist)
    _emit({
        "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
        "dist": [dist.k1, dist.k2, dist.p1, dist.p2, dist.k3],
        "residual_rms_px": rms,
        "views": len(views),
    })
    return 0


def _cmd_simulate(args) -> int:
    if args.intrinsics:
        intr, dist = load_intrinsics(args.intrinsics)
    else:
        intr, dist = scenario_mod.default_intrinsics()
    rig = load_rig(args.rig) if args.rig else two_eye_rig()
    display = (DisplaySpec(physical_size=tuple(args.display_mm),
                           resolution=tuple(args.display_px))
               if args.display_mm else PAPER_DISPLAY)
    scene = build_scene(rig, display, intr, dist, plane_distance_f=args.plane_distance)
    fixation = pixel_to_fixation(scene, args.pixel, FixedDepth(args.depth))
    rotations, violations = fixate_clamped(rig, fixation.target)
    _emit({
        "pixel": list(args.pixel),
        "fixation": {
            "direction": [float(v) for v in fixation.direction],
            "distance_mm": fixation.distance,
            "target_mm": [float(v) for v in fixation.target],
        },
        "eyes": [
            {"quaternion_wxyz": [float(v) for v in r.quaternion],
             "direction": [float(v) for v in r.direction]}
            for r in rotations
        ],
        "recognized_gaze": [float(v) for v in recognized_gaze(rig, rotations)],
        "limit_violations": [
            {"eye": v.eye_index, "axis": v.axis, "angle": v.angle, "limit": v.limit}
            for v in violations
        ],
    }, args.out)
    return 0


def _cmd_calib_record(args) -> int:
    session = calib.CalibrationSession(plane_bounds=tuple(args.bounds), path=args.pairs)
    pair = calib.record_pair(session, args.commanded, args.perceived,
                             observer_id=args.observer)
    _emit({"recorded": pair.to_dict(), "pair_count": len(session.pairs)})
    return 0


def _cmd_calib_fit(args) -> int:
    pairs = calib.load_pairs(args.pairs)
    config = calib.FitConfig(max_degree=args.max_degree,
                             selection_penalty=args.penalty,
                             min_pairs=args.min_pairs)
    model = calib.fit_correction(pairs, config, avatar_id=args.avatar)
    if args.out:
        calib.save_model(args.out, model)
    _emit(model.to_dict())
    return 0


def _cmd_calib_validate(args) -> int:
    pairs = calib.load_pairs(args.pairs)
    config = calib.FitConfig(max_degree=args.max_degree,
                             selection_penalty=args.penalty,
                             min_pairs=args.min_pairs)
    report = calib.cross_validate(pairs, config, folds=args.folds)
    _emit(report.to_dict(), args.out)
    return 0


def _cmd_calib_apply(args) -> int:
    model = calib.load_model(args.model)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ExtrapolationWarning)
        corrected = calib.apply_correction(model, args.point)
    _emit({
        "intended": list(args.point),
        "command": [float(v) for v in corrected],
        "extrapolated": any(issubclass(w.category, ExtrapolationWarning) for w in caught),
    })
    return 0


def _cmd_schedule_check(args) -> int:
    drive = sched.load_drive(args.drive) if args.drive else sched.paper_drive()
    timing = sched.CameraTiming(fps=args.fps, exposure_ms=args.exposure,
                                allow_split=args.split)
    horizon = args.horizon if args.horizon else 10 * timing.frame_ms
    schedule = sched.schedule_exposures(drive, timing, horizon)
    report = sched.schedule_report(schedule, drive)
    _emit(report, args.out)
    return 0 if report["ok"] else 1


def _cmd_scenario_run(args) -> int:
    report = scenario_mod.run_scenario_file(args.scenario, args.out)
    if not args.out:
        _emit(report)
    return 0 if report.get("ok") else 1


def _cmd_serve(args) -> int:
    session_dir = args.session_dir or os.environ.get(service_mod.SESSION_DIR_ENV)
    service_mod.serve(host=args.host, port=args.port, session_dir=session_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazekit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_intr = sub.add_parser("intrinsics", help="camera intrinsics tools")
    intr_sub = p_intr.add_subparsers(dest="subcommand", required=True)
    p_fit = intr_sub.add_parser("fit", help="fit intrinsics from planar views")
    p_fit.add_argument("--views", nargs="+", required=True, metavar="CSV")
    p_fit.add_argument("--width", type=int, default=1440)
    p_fit.add_argument("--height", type=int, default=1080)
    p_fit.add_argument("--out")
    p_fit.set_defaults(func=_cmd_intrinsics_fit)

    p_sim = sub.add_parser("simulate", help="fixation dry run for one pixel")
    p_sim.add_argument("--pixel", nargs=2, type=float, required=True, metavar=("U", "V"))
    p_sim.add_argument("--rig")
    p_sim.add_argument("--intrinsics")
    p_sim.add_argument("--display-mm", nargs=2, type=float, metavar=("W", "H"))
    p_sim.add_argument("--display-px", nargs=2, type=int, default=(320, 360))
    p_sim.add_argument("--plane-distance", type=float, default=1000.0)
    p_sim.add_argument("--depth", type=float, default=1000.0)
    p_sim.add_argument("--out")
    p_sim.set_defaults(func=_cmd_simulate)

    p_calib = sub.add_parser("calib", help="perception-pair calibration")
    calib_sub = p_calib.add_subparsers(dest="subcommand", required=True)

    p_rec = calib_sub.add_parser("record", help="append one pair to a log")
    p_rec.add_argument("--pairs", required=True, metavar="JSONL")
    p_rec.add_argument("--commanded", nargs=2, type=float, required=True, metavar=("U", "V"))
    p_rec.add_argument("--perceived", nargs=2, type=float, required=True, metavar=("U", "V"))
    p_rec.add_argument("--observer", default="")
    p_rec.add_argument("--bounds", nargs=2, type=float, default=(1440.0, 1080.0))
    p_rec.set_defaults(func=_cmd_calib_record)

    p_cfit = calib_sub.add_parser("fit", help="fit a correction model")
    p_cfit.add_argument("--pairs", required=True, metavar="JSONL")
    p_cfit.add_argument("--max-degree", type=int, default=3)
    p_cfit.add_argument("--penalty", type=float, default=1e-6)
    p_cfit.add_argument("--min-pairs", type=int, default=calib.DEFAULT_MIN_PAIRS)
    p_cfit.add_argument("--avatar", default="default")
    p_cfit.add_argument("--out")
    p_cfit.set_defaults(func=_cmd_calib_fit)

    p_val = calib_sub.add_parser("validate", help="cross-validate a fit")
    p_val.add_argument("--pairs", required=True, metavar="JSONL")
    p_val.add_argument("--folds", type=int, default=3)
    p_val.add_argument("--max-degree", type=int, default=3)
    p_val.add_argument("--penalty", type=float, default=1e-6)
    p_val.add_argument("--min-pairs", type=int, default=calib.DEFAULT_MIN_PAIRS)
    p_val.add_argument("--out")
    p_val.set_defaults(func=_cmd_calib_validate)

    p_app = calib_sub.add_parser("apply", help="correct one intended point")
    p_app.add_argument("--model", required=True, metavar="JSON")
    p_app.add_argument("--point", nargs=2, type=float, required=True, metavar=("U", "V"))
    p_app.set_defaults(func=_cmd_calib_apply)

    p_sched = sub.add_parser("schedule", help="capture scheduling tools")
    sched_sub = p_sched.add_subparsers(dest="subcommand", required=True)
    p_chk = sched_sub.add_parser("check", help="schedule and audit exposures")
    p_chk.add_argument("--drive", metavar="JSON", help="drive preset file (default: alternating 180 Hz fields)")
    p_chk.add_argument("--fps", type=float, default=50.0)
    p_chk.add_argument("--exposure", type=float, default=6.0)
    p_chk.add_argument("--split", action="store_true")
    p_chk.add_argument("--horizon", type=float, help="milliseconds (default: 10 frames)")
    p_chk.add_argument("--out")
    p_chk.set_defaults(func=_cmd_schedule_check)

    p_scen = sub.add_parser("scenario", help="closed-loop scenario harness")
    scen_sub = p_scen.add_subparsers(dest="subcommand", required=True)
    p_run = scen_sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario", metavar="JSON")
    p_run.add_argument("--out")
    p_run.set_defaults(func=_cmd_scenario_run)

    p_serve = sub.add_parser("serve", help="run the NDJSON session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--session-dir")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GazeEngineError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFound", "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
