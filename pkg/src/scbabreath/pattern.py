"""Sliding-window breath similarity against a template, and peak/run event extraction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .cepstral import Cepstrogram
from .errors import ShapeMismatch, TooShort
from .events import BreathEvent
from .frontend import make_window
from .template import BreathTemplate

EPS = 1e-9


@dataclass(frozen=True, eq=False)
class IndexSeries:
    values: np.ndarray  # breath similarity per window position
    times: np.ndarray  # window start, seconds
    normalized: bool = False
    threshold_used: float = float("nan")
    window_span_s: float = 0.0  # time covered by one window, start of first frame to end of last

    def __len__(self):
        return self.values.shape[0]

    def normalize(self) -> "IndexSeries":
        peak = self.values.max() if len(self) else 0.0
        vals = self.values / peak if peak > 0 else self.values.copy()
        return IndexSeries(vals, self.times, True, self.threshold_used, self.window_span_s)


def _column_lifter(num_coeffs: int) -> np.ndarray:
    if num_coeffs < 2:
        return np.ones(num_coeffs)
    return make_window(num_coeffs, "half_hamming")


def normalized_difference(window, t: BreathTemplate, remove_dc: bool = True,
                          lifter: bool = True) -> np.ndarray:
    """``(window - T) / V`` elementwise, each column then liftered by a half-Hamming.

    The window's columns are DC-removed the same way the template's were.
    """
    w = np.asarray(window, dtype=np.float64)
    if w.shape != t.mean.shape:
        raise ShapeMismatch(f"window shape {w.shape} != template shape {t.mean.shape}")
    if remove_dc:
        w = w - w.mean(axis=0, keepdims=True)
    d = (w - t.mean) / t.variance
    if lifter:
        d = d * _column_lifter(d.shape[0])[:, None]
    return d


def similarity_cp(d) -> float:
    return 1.0 / max(float(np.sum(np.square(d))), EPS)


def similarity_cn(d, s1) -> float:
    """Inverse of the summed per-column projection magnitudes ``sum_j |s1 . D_j|``.

    Taking magnitudes column by column keeps projections of opposite sign
    from cancelling into a spurious near-exact match.
    """
    d = np.asarray(d, dtype=np.float64)
    s1 = np.asarray(s1, dtype=np.float64)
    if s1.shape[0] != d.shape[0]:
        raise ShapeMismatch("singular vector length must equal rows of D")
    return 1.0 / max(float(np.sum(np.abs(s1 @ d))), EPS)


def breath_similarity(window, t: BreathTemplate) -> float:
    d = normalized_difference(window, t)
    return similarity_cp(d) * similarity_cn(d, t.singular)


def breath_index_track(c: Cepstrogram, t: BreathTemplate, normalize: bool = False,
                       frame_len_s: float | None = None) -> IndexSeries:
    """B = C_p * C_n for every window position, advancing one column at a time."""
    width = t.width
    n = c.num_columns
    if n < width:
        raise TooShort(f"cepstrogram has {n} columns, template needs {width}")
    # (positions, coeffs, width)
    win = sliding_window_view(c.columns, width, axis=1).transpose(1, 0, 2)
    win = win - win.mean(axis=1, keepdims=True)
    d = (win - t.mean[None]) / t.variance[None]
    d = d * _column_lifter(d.shape[1])[None, :, None]
    energy = np.sum(d * d, axis=(1, 2))
    proj = np.abs(np.einsum("k,pkj->pj", t.singular, d)).sum(axis=1)
    values = 1.0 / np.maximum(energy, EPS) / np.maximum(proj, EPS)
    times = c.times[: n - width + 1].copy()
    step = float(c.times[1] - c.times[0]) if n > 1 else 0.0
    if frame_len_s is None:
        frame_len_s = step
    span = (width - 1) * step + frame_len_s
    series = IndexSeries(values, times, False, float("nan"), span)
    return series.normalize() if normalize else series


def find_peaks(values) -> np.ndarray:
    """Strict local maxima; endpoints and plateaus never count."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape[0] < 3:
        return np.zeros(0, dtype=int)
    mid = v[1:-1]
    return np.flatnonzero((mid > v[:-2]) & (mid > v[2:])) + 1


def runs_of(mask) -> list[tuple[int, int]]:
    """Maximal runs of True as half-open index pairs (start, stop)."""
    m = np.concatenate([[False], np.asarray(mask, dtype=bool), [False]])
    edges = np.flatnonzero(np.diff(m.astype(np.int8)))
    return list(zip(edges[::2].tolist(), edges[1::2].tolist()))


def merge_runs(runs, max_gap: int) -> list[tuple[int, int]]:
    """Join consecutive runs separated by at most ``max_gap`` indices."""
    out: list[list[int]] = []
    for a, b in runs:
        if out and a - out[-1][1] <= max_gap:
            out[-1][1] = b
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def detect_events_pattern(series: IndexSeries, threshold: float = 0.25,
                          min_frames: int = 10) -> list[BreathEvent]:
    """Events from runs of at least ``min_frames`` consecutive values >= threshold.

    Start is the time of the first window in the run; end is the end of the
    last window in the run.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if min_frames < 1:
        raise ValueError("min_frames must be >= 1")
    events = []
    for a, b in runs_of(series.values >= threshold):
        if b - a < min_frames:
            continue
        start = series.times[a]
        end = series.times[b - 1] + max(series.window_span_s, 1e-9)
        events.append(BreathEvent.span(start, end, series.values[a:b].max(), "pattern"))
    return events
