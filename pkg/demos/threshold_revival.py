"""A cleansing corner case: more motion energy can let a bin back in.

Cleansing subtracts the largest accelerometer spectrum from the PPG spectrum
and then zeroes everything below a quarter of the largest remaining value.
If extra motion energy lands on the bin that set that maximum, the threshold
drops and a coefficient that was zeroed before now survives. The cleansed
spectrum is therefore not monotone in the accelerometer spectra.
"""

import numpy as np

from sparsehr.cleanse import subtract_and_threshold

ppg = np.array([1.0, 0.2, 0.0, 0.0])
quiet = np.zeros((4, 3))
busy = quiet.copy()
busy[0, 0] = 0.5

for name, acc in (("quiet accelerometer", quiet), ("motion on bin 0", busy)):
    out = subtract_and_threshold(ppg, acc)
    print(f"{name:<20} p_max {out.p_max:.2f}  threshold {out.threshold:.3f}  cleansed {out.s}")

r = np.random.default_rng(7)
revived = 0
for _ in range(1000):
    S = r.exponential(1.0, (64, 4)) * (r.random((64, 4)) < 0.6)
    acc = S[:, 1:].copy()
    acc[r.integers(64), r.integers(3)] += r.exponential(1.0)
    revived += np.any(subtract_and_threshold(S[:, 0], acc).s > subtract_and_threshold(S[:, 0], S[:, 1:]).s)
print(f"\nrandom spectra where a single accelerometer increase raised some bin: {revived}/1000")
