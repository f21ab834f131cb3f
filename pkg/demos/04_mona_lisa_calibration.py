"""Closing the loop on perceived gaze.

A face on a flat panel reads as "looking at me" from almost anywhere, so
the point observers report as eye contact drifts from the commanded one,
mostly horizontally. This demo plays both roles: a simulated perceiver
with a horizontal-gain distortion stands in for the human, and a
correction model is fitted from the commanded/perceived pairs and
validated on points it never trained on.
"""

import numpy as np

from gazekit import (
    AffineField,
    CalibrationSession,
    apply_correction,
    fit_correction,
    perception_error,
    record_pair,
    simulate_perceiver,
)

BOUNDS = (1440.0, 1080.0)

# The "observer": reports eye contact 30% too far right, shifted 20 px.
observer = AffineField(a=1.3, c=-20.0)

session = CalibrationSession(plane_bounds=BOUNDS, avatar_id="demo")
grid = [(u, v)
        for v in np.linspace(324.0, 756.0, 5)
        for u in np.linspace(432.0, 1008.0, 5)]
rng = np.random.default_rng(3)  # one generator: independent noise per pair
for commanded in grid:
    perceived = simulate_perceiver(observer, commanded, noise_sigma=0.5, rng=rng)
    record_pair(session, commanded, perceived, observer_id="sim")

print(f"collected {len(session.pairs)} pairs")
print(f"raw perception error: {perception_error(session.pairs):.2f} px RMS")

model = fit_correction(session.pairs)
stats = model.fit_stats
print(f"fitted terms {model.basis}")
print(f"training residual: {stats['pre_rms']:.2f} -> {stats['post_rms']:.3f} px RMS")

# Validation on held-out intentions: correct each one, push the corrected
# command through the observer, and measure how far from the intention the
# report lands.
rng = np.random.default_rng(4)
intents = np.column_stack([rng.uniform(450, 990, 25), rng.uniform(340, 740, 25)])
pre, post = [], []
for q in intents:
    pre.append(np.linalg.norm(observer.apply(q) - q))
    cmd = apply_correction(model, q)
    post.append(np.linalg.norm(observer.apply(cmd) - q))
print(f"\nheld-out error: {np.sqrt(np.mean(np.square(pre))):.2f} px "
      f"-> {np.sqrt(np.mean(np.square(post))):.3f} px RMS")
