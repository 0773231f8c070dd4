"""
Rates and durations from a field log
====================================

Event times logged during a live training exercise, rounded to 10 ms.
Rates come from successive starts; the histogram shows two modes.
"""

import csv
from pathlib import Path

import numpy as np

from scbabreath.events import RateSeries, breathing_rates, histogram, screen_outliers

data = Path(__file__).resolve().parent.parent / "tests" / "data"
with open(data / "field_rates.csv", newline="") as f:
    rows = list(csv.DictReader(f))

# one timestamp is logged twice; keep the first
times, printed = [], []
for r in rows:
    t = float(r["event_time_s"])
    if times and t == times[-1]:
        continue
    times.append(t)
    printed.append(float(r["rate_bpm"]))

rates = breathing_rates(times)
diff = np.abs(rates.rate_bpm - np.array(printed[1:]))
print("rows", len(rates), "max |recomputed - logged| %.3f bpm" % diff.max())

# 10 ms rounding on both ends leaves up to about 0.8 bpm of slack at short intervals
worst = int(np.argmax(diff))
print("worst row at %.2f s: interval %.2f s" % (rates.event_time_s[worst],
                                                 times[worst + 1] - times[worst]))

kept, flagged = screen_outliers(RateSeries(rates.event_time_s, np.array(printed[1:])), 4, 60)
print("kept", len(kept), "flagged", flagged.rate_bpm.tolist())

h = histogram(kept.rate_bpm, 5, (0, 100))
for lo, n in zip(h.edges[:-1], h.counts):
    if n:
        print("%3d-%-3d %s" % (lo, lo + 5, "#" * n))
