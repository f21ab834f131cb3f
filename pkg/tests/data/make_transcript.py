"""Regenerate the golden wire transcript.

Run from the repository root:

    python tests/data/make_transcript.py

Records a full calibration exchange (fixation, nine pairs with a +30 px
horizontal bias, fit, apply, corrected fixation) against a live server.
Every line is {"direction": "send"|"recv", "message": {...}}; replies and
broadcasts appear in arrival order. All payload timestamps are pinned so
the recording is reproducible.
"""

import json
import sys
from pathlib import Path

import numpy as np

from gazekit.service import NdjsonClient, start_background_server

OUT = Path(__file__).parent / "golden_transcript.jsonl"


def grid_9(bounds=(1440.0, 1080.0)):
    w, h = bounds
    return [[float(u), float(v)]
            for v in np.linspace(0.2 * h, 0.8 * h, 3)
            for u in np.linspace(0.2 * w, 0.8 * w, 3)]


class RecordingClient(NdjsonClient):
    def __init__(self, host, port, log):
        super().__init__(host, port)
        self.log = log

    def request(self, mtype, payload=None):
        self._next_id += 1
        msg = {"type": mtype, "id": self._next_id, "payload": payload or {}}
        self.log.append({"direction": "send", "message": msg})
        self.sock.sendall((json.dumps(msg) + "\n").encode("utf-8"))
        while True:
            line = self.file.readline()
            if not line:
                raise ConnectionError("server closed the connection")
            reply = json.loads(line)
            self.log.append({"direction": "recv", "message": reply})
            if reply.get("type") != "state_update":
                return reply


def main():
    server, _ = start_background_server()
    host, port = server.server_address
    log = []
    client = RecordingClient(host, port, log)
    try:
        client.request("set_fixation_pixel", {"pixel": [720.0, 540.0]})
        for point in grid_9():
            client.request("record_pair", {
                "commanded": point,
                "perceived": [point[0] + 30.0, point[1]],
                "observer": "golden",
                "t": 0.0,
            })
        fit = client.request("fit_calibration", {})
        client.request("apply_model", {"model": fit["payload"]["model"]})
        client.request("set_fixation_pixel", {"pixel": [720.0, 540.0]})
        client.request("get_state", {})
    finally:
        client.close()
        server.shutdown()

    with open(OUT, "w", encoding="utf-8") as f:
        for entry in log:
            f.write(json.dumps(entry, sort_keys=True) + "\n")
    print(f"wrote {len(log)} lines to {OUT}")


if __name__ == "__main__":
    sys.exit(main())
