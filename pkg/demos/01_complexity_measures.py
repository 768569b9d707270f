"""
Fluctuation, distribution and dynamic complexity
================================================

Three small windows show what each measure rewards.
"""

import numpy as np

from teampulse import AnalysisWindow, distribution, dynamic_complexity, fluctuation

# A window that swings between the scale bounds at every step has the
# largest fluctuation possible.  A ramp barely fluctuates but spreads its
# values evenly, so its distribution is perfect.  Two clusters at the
# extremes sit in between.
windows = {
    "oscillating": (np.array([0, 5] * 6, float), 0, 5),
    "ramp": (np.arange(12, dtype=float), 0, 11),
    "two clusters": (np.array([0] * 6 + [11] * 6, float), 0, 11),
    "constant": (np.full(12, 3.0), 0, 11),
}

print(f"{'window':<14}{'F':>10}{'D':>10}{'DC':>10}")
for name, (values, lo, hi) in windows.items():
    w = AnalysisWindow(values, lo, hi)
    print(f"{name:<14}{fluctuation(w):>10.4f}{distribution(w):>10.4f}"
          f"{dynamic_complexity(w):>10.4f}")

# Distribution only looks at the sorted values, so shuffling a window
# leaves it unchanged while fluctuation moves.
rng = np.random.default_rng(0)
ramp = np.arange(12, dtype=float)
shuffled = rng.permutation(ramp)
a, b = AnalysisWindow(ramp, 0, 11), AnalysisWindow(shuffled, 0, 11)
print("\nshuffled ramp:", shuffled.astype(int))
print(f"D before/after: {distribution(a):.4f} / {distribution(b):.4f}")
print(f"F before/after: {fluctuation(a):.4f} / {fluctuation(b):.4f}")
