"""Step the tracker by hand through a few situations.

Each cleansed spectrum here is built directly, so the outcome of every branch
is easy to see: the kurtosis gate, nearest-peak tracking, the trend tie-break,
the 12 BPM verification reset, and recovery through Discovery after a stall.
"""

import numpy as np

from sparsehr.cleanse import subtract_and_threshold
from sparsehr.spectrum import bin_to_bpm
from sparsehr.track import TrackerConfig, TrackerState, step

N = 1024
cfg = TrackerConfig()


def spectrum(peaks):
    s = np.zeros(N)
    for k, v in peaks.items():
        s[k] = s[N - k] = v
    return subtract_and_threshold(s, np.zeros((N, 3)))


def show(label, state, peaks):
    state, d = step(state, spectrum(peaks), cfg)
    bpm = "-" if d.bpm is None else f"{d.bpm:.1f}"
    print(f"{label:<36} {d.stage_used.value:<10} bin {str(d.selected_bin):>4}  {bpm:>6} BPM  "
          f"{','.join(sorted(d.flags)) or ''}")
    return state


state = TrackerState()
flat = {k: 1.0 for k in range(40, 100, 3)}
state = show("flat band: kurtosis gate holds", state, flat)
state = show("one clear peak at bin 70", state, {70: 1.0, 140: 0.6})
for k in (72, 74, 76, 78):
    state = show(f"peak moves to {k}", state, {k: 1.0, k - 20: 0.8})
state = show("equidistant peaks 75 and 81, rising", state, {75: 1.0, 81: 1.0})
state = show("only a jump to bin 93 (> 12 BPM)", state, {93: 1.0})
for i in range(2):
    state = show(f"nothing found ({i + 2} of 3 unchanged)", state, {})
print(f"  -> stage now {state.stage.value}; history ends {state.loc_history[-3:]}")
state = show("peak reappears at 86", state, {86: 1.0, 30: 2.0})
print(f"\none bin on this grid is {bin_to_bpm(1, 25, N):.3f} BPM")
