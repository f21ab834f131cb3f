"""The whole pipeline over the wire.

Starts the NDJSON service in-process, drives it like the operator UI
would: set a fixation, record a 3x3 calibration walkthrough with a biased
synthetic observer, fit, activate the model, and watch the service correct
subsequent fixation commands. Everything here also works over
`gazekit serve` from another process.
"""

import tempfile

import numpy as np

from gazekit.service import NdjsonClient, start_background_server

with tempfile.TemporaryDirectory() as session_dir:
    server, _ = start_background_server(session_dir=session_dir)
    host, port = server.server_address
    client = NdjsonClient(host, port)
    try:
        reply = client.request("set_fixation_pixel", {"pixel": [900.0, 540.0]})
        print("fixation direction:",
              [round(x, 4) for x in reply["payload"]["direction"]])

        # Walkthrough: the synthetic operator clicks 30 px right of truth.
        for v in np.linspace(216.0, 864.0, 3):
            for u in np.linspace(288.0, 1152.0, 3):
                client.request("record_pair", {
                    "commanded": [u, v],
                    "perceived": [u + 30.0, v],
                    "observer": "demo-operator",
                })
        fit = client.request("fit_calibration", {})
        stats = fit["payload"]["fit_stats"]
        print(f"fit over {stats['n_pairs']} pairs: "
              f"{stats['pre_rms']:.1f} -> {stats['post_rms']:.2e} px RMS")

        client.request("apply_model", {"model": fit["payload"]["model"]})
        reply = client.request("set_fixation_pixel", {"pixel": [720.0, 540.0]})
        print("commanded pixel after correction:",
              [round(x, 2) for x in reply["payload"]["commanded_pixel"]],
              "(the 30 px bias is pre-compensated)")

        state = client.request("get_state")
        print(f"final revision {state['revision']}, "
              f"{state['payload']['pair_count']} pairs logged in {session_dir}")
    finally:
        client.close()
        server.shutdown()
