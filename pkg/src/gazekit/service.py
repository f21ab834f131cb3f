"""Stateful session service speaking newline-delimited JSON.

Every request receives exactly one reply; mutations additionally broadcast
a state_update carrying the revision they produced. All engine modules
stay pure; this is the only place state lives. Messages are dicts:

    request:  {"type": <op>, "id": <any>, "payload": {...}}
    reply:    {"type": <op>, "id": <any>, "ok": true, "revision": R,
               "payload": {...}}
    error:    {"type": "error", "id": <any>, "ok": false,
               "code": <machine-readable>, "message": <human-readable>}
    update:   {"type": "state_update", "revision": R, "payload": {...}}

The same handler serves a TCP socket (one JSON object per line) and
in-process callers; writes are serialized through a single lock.
"""

from __future__ import annotations

import json
import os
import socket
import socketserver
import threading
import time
from pathlib import Path

import numpy as np

from . import calibration as calib
from . import scenario as scenario_mod
from .camera import CameraIntrinsics, DistortionCoefficients
from .errors import GazeEngineError, ProtocolError
from .pnp import FixedDepth
from .rig import fixate_clamped, recognized_gaze, rig_from_dict, rig_to_dict, two_eye_rig
from .scene import PAPER_DISPLAY, build_scene, pixel_to_fixation

SESSION_DIR_ENV = "GAZE_SESSION_DIR"


class SessionState:
    """Scene, active fixation, pair log, and the active correction model.

    The revision counter increases by exactly one per accepted mutation.
    """

    def __init__(self, scene, session_dir=None, display=PAPER_DISPLAY):
        self.scene = scene
        self.display = display
        self.fixation = None
        self.fixation_pixel = None
        self.rotations = []
        self.violations = []
        self.model = None
        self.revision = 0
        self.session_dir = Path(session_dir) if session_dir else None
        pairs_path = None
        if self.session_dir is not None:
            self.session_dir.mkdir(parents=True, exist_ok=True)
            pairs_path = self.session_dir / "pairs.jsonl"
        self.calibration = calib.CalibrationSession(
            plane_bounds=scene.virtual_camera.resolution,
            path=pairs_path,
        )

    def snapshot(self) -> dict:
        eyes = []
        for rot in self.rotations:
            eyes.append({
                "quaternion_wxyz": [float(v) for v in rot.quaternion],
                "direction": [float(v) for v in rot.direction],
            })
        gaze = None
        if self.rotations:
            try:
                gaze = [float(v) for v in recognized_gaze(self.scene.avatar, self.rotations)]
            except GazeEngineError:
                gaze = None
        fix = None
        if self.fixation is not None:
            fix = {
                "pixel": [float(v) for v in self.fixation_pixel],
                "direction": [float(v) for v in self.fixation.direction],
                "distance_mm": float(self.fixation.distance),
                "target_mm": [float(v) for v in self.fixation.target],
            }
        return {
            "revision": self.revision,
            "fixation": fix,
            "eyes": eyes,
            "recognized_gaze": gaze,
            "violations": [
                {"eye": v.eye_index, "axis": v.axis,
                 "angle": float(v.angle), "limit": float(v.limit)}
                for v in self.violations
            ],
            "model_active": self.model is not None,
            "pair_count": len(self.calibration.pairs),
            "plane_bounds": [float(v) for v in self.scene.virtual_camera.resolution],
            "rig": {
                "eye_centers": [[float(v) for v in c]
                                for c in self.scene.avatar.eye_centers_world()],
                "anchor": [float(v) for v in self.scene.anchor],
                "weights": [float(w) for w in self.scene.avatar.weights],
            },
        }


def default_scene():
    intr = CameraIntrinsics(fx=1250.0, fy=1250.0, cx=720.0, cy=540.0,
                            resolution=(1440, 1080))
    return build_scene(two_eye_rig(), PAPER_DISPLAY, intr, DistortionCoefficients())


class GazeService:
    """Message handler owning one SessionState behind a writer lock."""

    def __init__(self, scene=None, session_dir=None):
        self.state = SessionState(scene or default_scene(), session_dir)
        self._lock = threading.Lock()
        self._handlers = {
            "get_state": self._get_state,
            "set_fixation_pixel": self._set_fixation_pixel,
            "record_pair": self._record_pair,
            "fit_calibration": self._fit_calibration,
            "apply_model": self._apply_model,
            "load_rig": self._load_rig,
            "run_scenario": self._run_scenario,
        }

    def handle(self, message: dict) -> tuple[dict, dict | None]:
        """Process one message; returns (reply, broadcast-or-None)."""
        msg_id = message.get("id") if isinstance(message, dict) else None
        try:
            if not isinstance(message, dict):
                raise ProtocolError("bad_message", "message must be a JSON object")
            mtype = message.get("type")
            handler = self._handlers.get(mtype)
            if handler is None:
                raise ProtocolError("unknown_type", f"unknown message type {mtype!r}")
            payload = message.get("payload", {})
            if not isinstance(payload, dict):
                raise ProtocolError("bad_payload", "payload must be an object")
            with self._lock:
                before = self.state.revision
                result = handler(payload)
                mutated = self.state.revision != before
                reply = {
                    "type": mtype,
                    "id": msg_id,
                    "ok": True,
                    "revision": self.state.revision,
                    "payload": result,
                }
                broadcast = None
                if mutated:
                    broadcast = {
                        "type": "state_update",
                        "revision": self.state.revision,
                        "payload": self.state.snapshot(),
                    }
                return reply, broadcast
        except ProtocolError as exc:
            return self._error(msg_id, exc.code, str(exc)), None
        except GazeEngineError as exc:
            return self._error(msg_id, type(exc).__name__, str(exc)), None
        except (KeyError, TypeError, ValueError) as exc:
            return self._error(msg_id, "bad_payload", str(exc)), None

    @staticmethod
    def _error(msg_id, code, message):
        return {"type": "error", "id": msg_id, "ok": False,
                "code": code, "message": message}

    # -- handlers (called under the lock) --------------------------------

    def _get_state(self, payload):
        return self.state.snapshot()

    def _set_fixation_pixel(self, payload):
        pixel = np.asarray(payload["pixel"], dtype=float)
        commanded = pixel
        if self.state.model is not None and payload.get("correct", True):
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                commanded = calib.apply_correction(self.state.model, pixel)
        depth = FixedDepth(float(payload.get("depth_mm", 1000.0)))
        fixation = pixel_to_fixation(self.state.scene, commanded, depth)
        rotations, violations = fixate_clamped(self.state.scene.avatar, fixation.target)
        self.state.fixation = fixation
        self.state.fixation_pixel = pixel
        self.state.rotations = rotations
        self.state.violations = violations
        self.state.revision += 1
        return {
            "commanded_pixel": [float(v) for v in commanded],
            "direction": [float(v) for v in fixation.direction],
            "distance_mm": float(fixation.distance),
            "target_mm": [float(v) for v in fixation.target],
        }

    def _record_pair(self, payload):
        pair = calib.record_pair(
            self.state.calibration,
            payload["commanded"],
            payload["perceived"],
            observer_id=str(payload.get("observer", "")),
            timestamp=payload.get("t"),
        )
        self.state.revision += 1
        return {"pair_count": len(self.state.calibration.pairs),
                "deviation": [float(v) for v in pair.deviation]}

    def _fit_calibration(self, payload):
        config = calib.FitConfig(
            max_degree=int(payload.get("max_degree", 3)),
            selection_penalty=float(payload.get("selection_penalty", 1e-6)),
            min_pairs=int(payload.get("min_pairs", calib.DEFAULT_MIN_PAIRS)),
        )
        model = calib.fit_correction(self.state.calibration.pairs, config,
                                     avatar_id=self.state.calibration.avatar_id)
        if self.state.session_dir is not None:
            calib.save_model(self.state.session_dir / "model.json", model)
        self.state.revision += 1
        return {"model": model.to_dict(), "fit_stats": model.fit_stats}

    def _apply_model(self, payload):
        if payload.get("model") is None:
            self.state.model = None
        else:
            self.state.model = calib.CorrectionModel.from_dict(payload["model"])
        self.state.revision += 1
        return {"model_active": self.state.model is not None}

    def _load_rig(self, payload):
        rig = rig_from_dict(payload["rig"])
        old = self.state.scene
        self.state.scene = build_scene(
            rig,
            self.state.display,
            old.virtual_camera,
            old.distortion,
            plane_distance_f=old.plane_distance_f,
        )
        self.state.fixation = None
        self.state.fixation_pixel = None
        self.state.rotations = []
        self.state.violations = []
        self.state.revision += 1
        return {"eyes": len(rig), "rig": rig_to_dict(rig)}

    def _run_scenario(self, payload):
        if "path" in payload:
            spec = scenario_mod.load_scenario(payload["path"])
        else:
            spec = payload["scenario"]
        return scenario_mod.run_scenario(spec)


# ---------------------------------------------------------------------------
# Socket server


class _Handler(socketserver.StreamRequestHandler):
    def setup(self):
        super().setup()
        self.server.clients.append(self)
        self._write_lock = threading.Lock()

    def send(self, obj: dict):
        data = (json.dumps(obj) + "\n").encode("utf-8")
        with self._write_lock:
            try:
                self.wfile.write(data)
                self.wfile.flush()
            except OSError:
                pass

    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            try:
                message = json.loads(line)
            except json.JSONDecodeError as exc:
                self.send({"type": "error", "id": None, "ok": False,
                           "code": "bad_json", "message": str(exc)})
                continue
            reply, broadcast = self.server.service.handle(message)
            self.send(reply)
            if broadcast is not None:
                for client in list(self.server.clients):
                    client.send(broadcast)

    def finish(self):
        try:
            self.server.clients.remove(self)
        except ValueError:
            pass
        super().finish()


class GazeServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, service: GazeService):
        self.service = service
        self.clients: list[_Handler] = []
        super().__init__(address, _Handler)


def serve(host: str = "127.0.0.1", port: int = 8765, session_dir=None,
          scene=None, ready_event: threading.Event | None = None,
          announce=True):
    """Run the NDJSON service until interrupted.

    session_dir defaults to the GAZE_SESSION_DIR environment variable.
    Announces the bound address on stderr (port 0 picks a free port).
    """
    import sys

    if session_dir is None:
        session_dir = os.environ.get(SESSION_DIR_ENV)
    service = GazeService(scene=scene, session_dir=session_dir)
    server = GazeServer((host, port), service)
    bound_host, bound_port = server.server_address
    if announce:
        suffix = f" (session dir {session_dir})" if session_dir else ""
        print(f"serving on {bound_host}:{bound_port}{suffix}", file=sys.stderr, flush=True)
    if ready_event is not None:
        server.ready_port = bound_port
        ready_event.set()
    try:
        server.serve_forever(poll_interval=0.1)
    finally:
        server.server_close()
    return server


def start_background_server(host="127.0.0.1", port=0, session_dir=None, scene=None):
    """Spin up a server thread; returns (server, thread). For tests/demos."""
    service = GazeService(scene=scene, session_dir=session_dir)
    server = GazeServer((host, port), service)
    thread = threading.Thread(target=server.serve_forever,
                              kwargs={"poll_interval": 0.05}, daemon=True)
    thread.start()
    return server, thread


class NdjsonClient:
    """Minimal blocking client for the wire protocol."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.file = self.sock.makefile("r", encoding="utf-8")
        self._next_id = 0

    def request(self, mtype: str, payload: dict | None = None) -> dict:
        """Send one request and wait for its reply, skipping broadcasts."""
        self._next_id += 1
        msg = {"type": mtype, "id": self._next_id, "payload": payload or {}}
        self.sock.sendall((json.dumps(msg) + "\n").encode("utf-8"))
        while True:
            line = self.file.readline()
            if not line:
                raise ConnectionError("server closed the connection")
            reply = json.loads(line)
            if reply.get("type") == "state_update":
                continue
            return reply

    def close(self):
        try:
            self.file.close()
            self.sock.close()
        except OSError:
            pass
