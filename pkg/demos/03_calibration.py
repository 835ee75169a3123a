"""Recover the temperature that was used to distort a calibration set.

Frames are generated with q**T renormalized for a known T; fitting on the
stored distributions against their sampled labels should land on that T.
"""

from jerseyfuse.calibration import fit_temperature, nll
from jerseyfuse.synthgen import generate_calibration_frames

for true_temp in (0.7, 1.0, 2.0):
    frames = generate_calibration_frames(4000, true_temp=true_temp, seed=11)
    model = fit_temperature(frames)
    before = nll(frames, 1.0)
    after = nll(frames, model.T)
    print(f"true T={true_temp:.2f}  fitted T={model.T:.4f}  "
          f"nll {before:.4f} -> {after:.4f}")
