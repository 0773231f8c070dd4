"""All-pole modelling of the regulator hiss, inverse filtering and frame gain."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio import AudioBuffer
from .errors import CorruptFile, SilentFrame, SingularSystem
from .events import BreathEvent
from .frontend import FrameConfig, make_window, pre_emphasize, raw_frames
from .pattern import merge_runs, runs_of

LPC_VERSION = "lpc1"
DEFAULT_ORDER = 10
SILENCE_RMS = 1e-12


@dataclass(frozen=True, eq=False)
class LpcModel:
    """Predictor ``x[n] ~ sum_k a_k x[n-k]`` with excitation gain ``A``."""

    coeffs: np.ndarray
    gain: float
    reflection: np.ndarray = field(default_factory=lambda: np.zeros(0))
    autocorrelation: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def order(self) -> int:
        return self.coeffs.shape[0]

    @property
    def inverse_taps(self) -> np.ndarray:
        return np.concatenate([[1.0], -self.coeffs])


@dataclass(frozen=True, eq=False)
class GainSeries:
    values: np.ndarray  # residual-to-input power ratio per frame
    times: np.ndarray  # frame start, seconds
    power: np.ndarray  # mean-square of the input frame
    frame_len_s: float = 0.015

    def __len__(self):
        return self.values.shape[0]


def autocorrelation(frame, max_lag: int) -> np.ndarray:
    """Biased estimate ``R[k] = (1/L) sum_n x[n] x[n+k]`` for k = 0..max_lag."""
    x = np.asarray(frame, dtype=np.float64)
    n = x.shape[0]
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n - 1}]")
    full = np.correlate(x, x, mode="full")[n - 1 : n + max_lag]
    return full / n


def solve_lpc(r, order: int = DEFAULT_ORDER) -> LpcModel:
    """Levinson-Durbin solution of the Yule-Walker equations.

    Gain is ``sqrt(R[0] - sum_k a_k R[k])``, the root of the final prediction
    error energy (clamped at zero).
    """
    r = np.asarray(r, dtype=np.float64)
    if order > r.shape[0] - 1:
        raise ValueError(f"order {order} needs {order + 1} autocorrelation lags, got {r.shape[0]}")
    if not r[0] > 0:
        raise SingularSystem("R[0] must be positive (silent frame?)")
    a = np.zeros(order)
    k = np.zeros(order)
    err = r[0]
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        if err <= 0:
            raise SingularSystem("prediction error vanished; autocorrelation is not positive definite")
        ki = acc / err
        k[i] = ki
        a[:i] = a[:i] - ki * a[:i][::-1]
        a[i] = ki
        err *= 1.0 - ki * ki
    radicand = r[0] - np.dot(a, r[1 : order + 1])
    return LpcModel(a, float(np.sqrt(max(radicand, 0.0))), k, r[: order + 1].copy())


def inverse_filter(samples, model: LpcModel) -> np.ndarray:
    """FIR residual ``e[n] = x[n] - sum_k a_k x[n-k]`` with zero initial history."""
    return lfilter(model.inverse_taps, [1.0], np.asarray(samples, dtype=np.float64))


def _rms(x) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def frame_gain(residual_frame, original_frame) -> float:
    """``(rms(residual) / rms(original))**2``."""
    res = np.asarray(residual_frame, dtype=np.float64)
    orig = np.asarray(original_frame, dtype=np.float64)
    if res.shape != orig.shape:
        raise ValueError("residual and original frames must have equal length")
    ro = _rms(orig)
    if ro < SILENCE_RMS:
        raise SilentFrame("original frame is silent")
    return (_rms(res) / ro) ** 2


def adapt_autocorrelation(state, frame_r, beta: float) -> np.ndarray:
    """Exponential moving average ``(1 - beta) * R + beta * R_frame``."""
    if not 0 < beta <= 1:
        raise ValueError("beta must be in (0, 1]")
    return (1.0 - beta) * np.asarray(state, dtype=np.float64) + beta * np.asarray(frame_r, dtype=np.float64)


def windowed_autocorrelation(frame, order: int) -> np.ndarray:
    """Autocorrelation of a Hamming-windowed frame, scaled so ``R[0] == 1``."""
    x = np.asarray(frame, dtype=np.float64) * make_window(len(frame), "hamming")
    r = autocorrelation(x, order)
    return r / r[0] if r[0] > 0 else r


def fit_lpc(exemplars, order: int = DEFAULT_ORDER, frame_cfg: FrameConfig | None = None) -> LpcModel:
    """Seed model from the mean normalized frame autocorrelation of exemplar audio.

    Exemplars are pre-emphasized with the frame config's coefficient first, as
    the gain track does with the signal under test.
    """
    frame_cfg = frame_cfg or FrameConfig()
    acc = np.zeros(order + 1)
    count = 0
    for buf in exemplars:
        flen = frame_cfg.frame_length(buf.sample_rate)
        hop = frame_cfg.step_length(buf.sample_rate)
        x = pre_emphasize(buf.samples, frame_cfg.pre_emphasis_alpha)
        for fr in raw_frames(x, flen, hop):
            if _rms(fr) < SILENCE_RMS:
                continue
            acc += windowed_autocorrelation(fr, order)
            count += 1
    if count == 0:
        raise SingularSystem("exemplars contain no non-silent frames")
    return solve_lpc(acc / count, order)


class AdaptiveLpc:
    """Per-stream adaptive model; never share one instance across streams."""

    def __init__(self, seed: LpcModel, beta: float = 0.05):
        if not 0 < beta <= 1:
            raise ValueError("beta must be in (0, 1]")
        r = seed.autocorrelation if seed.autocorrelation.size else None
        if r is None:
            raise ValueError("seed model carries no source autocorrelation")
        self.beta = beta
        self.r = r / r[0]
        self.model = seed

    def update(self, frame) -> None:
        fr = windowed_autocorrelation(frame, self.model.order)
        if fr[0] <= 0:
            return
        self.r = adapt_autocorrelation(self.r, fr, self.beta)
        self.model = solve_lpc(self.r, self.model.order)


def gain_track(buf: AudioBuffer, model: LpcModel, frame_cfg: FrameConfig | None = None,
               beta: float | None = None, gate_threshold: float | None = None) -> GainSeries:
    """Per-frame gain of the inverse-filter residual over the pre-emphasized signal.

    With ``beta`` and ``gate_threshold`` set, the model adapts on frames whose
    gain falls at or below the gate. Silent frames get gain 1 (no whitening).
    """
    frame_cfg = frame_cfg or FrameConfig()
    rate = buf.sample_rate
    flen = frame_cfg.frame_length(rate)
    hop = frame_cfg.step_length(rate)
    x = pre_emphasize(buf.samples, frame_cfg.pre_emphasis_alpha)
    frames = raw_frames(x, flen, hop)
    n_frames = frames.shape[0]
    power = np.mean(frames * frames, axis=1) if n_frames else np.zeros(0)
    times = hop * np.arange(n_frames) / rate
    gains = np.ones(n_frames)
    if beta is None or gate_threshold is None:
        res_frames = raw_frames(inverse_filter(x, model), flen, hop)
        for i in range(n_frames):
            try:
                gains[i] = frame_gain(res_frames[i], frames[i])
            except SilentFrame:
                pass
        return GainSeries(gains, times, power, flen / rate)

    state = AdaptiveLpc(model, beta)
    order = model.order
    for i in range(n_frames):
        s = i * hop
        lo = max(0, s - order)
        seg = lfilter(state.model.inverse_taps, [1.0], x[lo : s + flen])[s - lo :]
        try:
            gains[i] = frame_gain(seg, frames[i])
        except SilentFrame:
            continue
        if gains[i] <= gate_threshold:
            state.update(frames[i])
    return GainSeries(gains, times, power, flen / rate)


@dataclass(frozen=True)
class LpcDetectConfig:
    gain_threshold: float = 0.8
    min_dur_s: float = 0.2
    max_dur_s: float = 60.0
    min_power_fraction: float = 0.25
    history_frames: int = 500
    merge_gap_s: float = 0.05  # bridge short dropouts inside one breath

    def gap_frames(self, step_s: float) -> int:
        return int(np.floor(self.merge_gap_s / step_s + 1e-9)) if step_s > 0 else 0


def detect_events_lpc(gains: GainSeries, cfg: LpcDetectConfig = LpcDetectConfig()) -> list[BreathEvent]:
    """Threshold the gain track, then screen candidates by power and duration.

    A frame matches the breath model when its gain is at or below the
    threshold. Frames weaker than ``min_power_fraction`` of the median power
    of previously accepted breath frames are dropped before duration checks.
    """
    history: list[float] = []
    events = []
    step = float(gains.times[1] - gains.times[0]) if len(gains) > 1 else 0.0
    for a, b in merge_runs(runs_of(gains.values <= cfg.gain_threshold), cfg.gap_frames(step)):
        if history:
            floor = cfg.min_power_fraction * float(np.median(history))
            keep = gains.power[a:b] >= floor
            pieces = [(a + p, a + q) for p, q in runs_of(keep)]
        else:
            pieces = [(a, b)]
        for p, q in pieces:
            start = gains.times[p]
            end = gains.times[q - 1] + gains.frame_len_s
            dur = end - start
            if dur < cfg.min_dur_s or dur > cfg.max_dur_s:
                continue
            peak = float(1.0 / max(gains.values[p:q].min(), 1e-12))
            events.append(BreathEvent.span(start, end, peak, "lpc"))
            history.extend(gains.power[p:q].tolist())
            del history[: max(0, len(history) - cfg.history_frames)]
    return events


def save_lpc(model: LpcModel, path) -> None:
    doc = {
        "version": LPC_VERSION,
        "coeffs": model.coeffs.tolist(),
        "gain": model.gain,
        "order": model.order,
        "source_autocorrelation": model.autocorrelation.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_lpc(path) -> LpcModel:
    try:
        doc = json.loads(Path(path).read_text())
        if doc.get("version") != LPC_VERSION:
            raise CorruptFile(f"{path}: expected version {LPC_VERSION!r}")
        coeffs = np.array(doc["coeffs"], dtype=np.float64)
        if coeffs.ndim != 1 or coeffs.shape[0] != int(doc["order"]):
            raise CorruptFile(f"{path}: order does not match coefficient count")
        r = np.array(doc["source_autocorrelation"], dtype=np.float64)
        model = solve_lpc(r, coeffs.shape[0]) if r.size else None
        return LpcModel(coeffs, float(doc["gain"]),
                        model.reflection if model is not None else np.zeros(0), r)
    except CorruptFile:
        raise
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
