"""Breath events, breathing rates, durations, outlier screening and report tables."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonMonotonic

DETECTORS = ("pattern", "lpc", "lpc_svm")

EVENT_COLUMNS = ["event_time_s", "end_time_s", "duration_s", "peak_value", "detector"]
RATE_COLUMNS = ["event_time_s", "rate_bpm", "flagged"]
DURATION_COLUMNS = ["event_time_s", "duration_s"]
HIST_COLUMNS = ["bin_lo", "bin_hi", "count"]
COMPARE_COLUMNS = ["truth_start_s", "detected_start_s", "start_error_s", "duration_error_s", "missed"]


@dataclass(frozen=True)
class BreathEvent:
    start_s: float
    end_s: float
    duration_s: float
    peak_value: float
    detector: str

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise ValueError(f"event end {self.end_s} must follow start {self.start_s}")
        if abs(self.duration_s - (self.end_s - self.start_s)) > 1e-9:
            raise ValueError("duration_s must equal end_s - start_s")
        if self.detector not in DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}")

    @classmethod
    def span(cls, start_s: float, end_s: float, peak_value: float, detector: str) -> "BreathEvent":
        return cls(float(start_s), float(end_s), float(end_s - start_s), float(peak_value), detector)


@dataclass(frozen=True, eq=False)
class RateSeries:
    event_time_s: np.ndarray
    rate_bpm: np.ndarray

    def __len__(self):
        return self.rate_bpm.shape[0]


def _times(events_or_times) -> np.ndarray:
    items = list(events_or_times)
    if items and isinstance(items[0], BreathEvent):
        return np.array([e.start_s for e in items], dtype=np.float64)
    return np.asarray(items, dtype=np.float64)


def breathing_rates(events) -> RateSeries:
    """60 / (start_i - start_{i-1}) for every event with a predecessor.

    Accepts BreathEvent objects or bare start times.
    """
    t = _times(events)
    if t.size > 1 and np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 1
        raise NonMonotonic(f"event {bad} at {t[bad]} s does not follow {t[bad - 1]} s")
    if t.size < 2:
        return RateSeries(np.zeros(0), np.zeros(0))
    return RateSeries(t[1:].copy(), 60.0 / np.diff(t))


def durations(events) -> list[float]:
    return [e.duration_s for e in events]


def screen_outliers(rates: RateSeries, lo_bpm: float = 4.0, hi_bpm: float = 60.0):
    """Split rates into (kept, flagged) by the inclusive band [lo_bpm, hi_bpm]."""
    if not lo_bpm < hi_bpm:
        raise ValueError("lo_bpm must be below hi_bpm")
    ok = (rates.rate_bpm >= lo_bpm) & (rates.rate_bpm <= hi_bpm)
    kept = RateSeries(rates.event_time_s[ok], rates.rate_bpm[ok])
    flagged = RateSeries(rates.event_time_s[~ok], rates.rate_bpm[~ok])
    return kept, flagged


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    underflow: int  # values below range, folded into the first bin
    overflow: int  # values at or above range end, folded into the last bin

    def modal_bins(self) -> list[tuple[float, float]]:
        if self.counts.size == 0 or self.counts.max() == 0:
            return []
        top = self.counts.max()
        return [(float(self.edges[i]), float(self.edges[i + 1])) for i in np.flatnonzero(self.counts == top)]


def histogram(values, bin_width: float, value_range: tuple[float, float]) -> Histogram:
    """Fixed-width bins over [lo, hi); out-of-range values clamp into the end bins."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    lo, hi = value_range
    n_bins = max(1, int(np.ceil((hi - lo) / bin_width - 1e-12)))
    edges = lo + bin_width * np.arange(n_bins + 1)
    v = np.asarray(list(values), dtype=np.float64)
    idx = np.floor((v - lo) / bin_width).astype(int) if v.size else np.zeros(0, dtype=int)
    under = int(np.sum(idx < 0))
    over = int(np.sum(idx >= n_bins))
    counts = np.bincount(np.clip(idx, 0, n_bins - 1), minlength=n_bins)
    return Histogram(edges, counts, under, over)


@dataclass(frozen=True)
class Match:
    truth: tuple[float, float]
    detected: BreathEvent | None

    @property
    def start_error(self) -> float | None:
        return None if self.detected is None else abs(self.detected.start_s - self.truth[0])

    @property
    def duration_error(self) -> float | None:
        if self.detected is None:
            return None
        return abs(self.detected.duration_s - (self.truth[1] - self.truth[0]))


@dataclass(frozen=True)
class Comparison:
    matches: list
    false_alarms: list

    @property
    def n_hits(self) -> int:
        return sum(m.detected is not None for m in self.matches)

    @property
    def recall(self) -> float:
        return self.n_hits / len(self.matches) if self.matches else 1.0

    @property
    def precision(self) -> float:
        n_det = self.n_hits + len(self.false_alarms)
        return self.n_hits / n_det if n_det else 1.0

    def start_errors(self) -> np.ndarray:
        return np.array([m.start_error for m in self.matches if m.detected is not None])


def compare(detected, truth, tolerance_s: float = 0.5) -> Comparison:
    """Greedy nearest-start matching of detections to truth intervals.

    Candidate pairs are taken in order of increasing start distance; each
    truth interval and each detection is used at most once.
    """
    detected = sorted(detected, key=lambda e: e.start_s)
    truth = [tuple(map(float, iv)) for iv in truth]
    pairs = []
    for ti, (ts, _) in enumerate(truth):
        for di, ev in enumerate(detected):
            d = abs(ev.start_s - ts)
            if d <= tolerance_s:
                pairs.append((d, ti, di))
    pairs.sort()
    used_t, used_d, assigned = set(), set(), {}
    for _, ti, di in pairs:
        if ti in used_t or di in used_d:
            continue
        used_t.add(ti)
        used_d.add(di)
        assigned[ti] = detected[di]
    matches = [Match(iv, assigned.get(i)) for i, iv in enumerate(truth)]
    false_alarms = [ev for i, ev in enumerate(detected) if i not in used_d]
    return Comparison(matches, false_alarms)


# -- CSV tables ---------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_events_csv(events, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(EVENT_COLUMNS)
        for e in events:
            w.writerow([_fmt(e.start_s), _fmt(e.end_s), _fmt(e.duration_s), _fmt(e.peak_value), e.detector])


def read_events_csv(path) -> list[BreathEvent]:
    """Parse an events table; raises ValueError on malformed content."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != EVENT_COLUMNS:
        raise ValueError(f"{path}: expected header {EVENT_COLUMNS}")
    events = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(EVENT_COLUMNS):
            raise ValueError(f"{path}:{lineno}: expected {len(EVENT_COLUMNS)} fields")
        start, end, _dur, peak = (float(v) for v in row[:4])
        events.append(BreathEvent.span(start, end, peak, row[4]))
    return events


def write_rates_csv(rates: RateSeries, path, lo_bpm: float = 4.0, hi_bpm: float = 60.0) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(RATE_COLUMNS)
        for t, r in zip(rates.event_time_s, rates.rate_bpm):
            w.writerow([_fmt(t), _fmt(r), int(not lo_bpm <= r <= hi_bpm)])


def write_durations_csv(events, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(DURATION_COLUMNS)
        for e in events:
            w.writerow([_fmt(e.start_s), _fmt(e.duration_s)])


def write_hist_csv(hist: Histogram, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(HIST_COLUMNS)
        for lo, hi, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            w.writerow([_fmt(lo), _fmt(hi), int(c)])


def write_compare_csv(cmp: Comparison, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(COMPARE_COLUMNS)
        for m in cmp.matches:
            if m.detected is None:
                w.writerow([_fmt(m.truth[0]), "", "", "", 1])
            else:
                w.writerow([_fmt(m.truth[0]), _fmt(m.detected.start_s), _fmt(m.start_error),
                            _fmt(m.duration_error), 0])
        for ev in cmp.false_alarms:
            w.writerow(["", _fmt(ev.start_s), "", "", 0])


def read_truth_json(path) -> list[tuple[float, float]]:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != "gt1":
        raise ValueError(f"{path}: expected ground-truth version 'gt1'")
    return [(float(iv["start_s"]), float(iv["end_s"])) for iv in doc["inhales"]]
