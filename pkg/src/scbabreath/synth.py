"""Labelled synthetic SCBA audio scenes.

Inhalations are band-shaped white noise ending in two valve clicks, the low
air alarm is a 28 Hz click train, and the speech proxy alternates voiced
sawtooth segments with short fricative bursts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import butter, lfilter, sosfilt

from .audio import CANONICAL_RATE, AudioBuffer, save_wav
from .errors import OverlapError

SEGMENT_KINDS = ("inhale", "exhale_pause", "speech_proxy", "silence", "alarm_overlay", "noise")
# kinds that may overlap anything
ADDITIVE_KINDS = ("alarm_overlay", "noise")

BREATH_BAND_HZ = (300.0, 3000.0)
EXHALE_BAND_HZ = (80.0, 500.0)
FRICATIVE_CUTOFF_HZ = 3500.0
ALARM_RATE_HZ = 28.0
VOICE_F0_HZ = 120.0
FORMANTS_HZ = ((700.0, 130.0), (1220.0, 170.0))


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _n(dur_s: float, rate: int) -> int:
    return int(round(dur_s * rate))


def raised_cosine_envelope(n: int, ramp: int) -> np.ndarray:
    env = np.ones(n)
    ramp = min(ramp, n // 2)
    if ramp > 0:
        r = 0.5 - 0.5 * np.cos(np.pi * (np.arange(ramp) + 0.5) / ramp)
        env[:ramp] = r
        env[n - ramp:] = r[::-1]
    return env


def _set_rms(x: np.ndarray, level: float) -> np.ndarray:
    rms = np.sqrt(np.mean(x * x)) if x.size else 0.0
    return x * (level / rms) if rms > 0 else x


def _click(rng, n_click: int, decay: float) -> np.ndarray:
    return rng.standard_normal(n_click) * np.exp(-np.arange(n_click) / decay)


def gen_inhale(dur_s: float, level: float, rate: int = CANONICAL_RATE, seed=0,
               band_hz=BREATH_BAND_HZ, ramp_s: float = 0.03, click_level: float = 2.0) -> np.ndarray:
    """Regulator inflow hiss of ``dur_s`` seconds with RMS ``level`` in its body."""
    if dur_s <= 0:
        raise ValueError("dur_s must be positive")
    rng = _rng(seed)
    n = _n(dur_s, rate)
    sos = butter(2, band_hz, btype="bandpass", fs=rate, output="sos")
    pad = _n(0.05, rate)
    noise = sosfilt(sos, rng.standard_normal(n + pad))[pad:]
    x = _set_rms(noise, level) * raised_cosine_envelope(n, _n(ramp_s, rate))
    # two valve clicks in the final 60 ms
    n_click = max(1, _n(0.002, rate))
    for off_s in (0.055, 0.02):
        start = n - _n(off_s, rate)
        if start < 0 or start + n_click > n:
            continue
        x[start:start + n_click] += click_level * level * _click(rng, n_click, n_click / 4)
    return x


def gen_alarm(dur_s: float, level: float, rate: int = CANONICAL_RATE, seed=0,
              rep_hz: float = ALARM_RATE_HZ) -> np.ndarray:
    """Click train at ``rep_hz``; each click is a 2 ms damped noise burst of peak scale ``level``."""
    if dur_s <= 0:
        raise ValueError("dur_s must be positive")
    rng = _rng(seed)
    n = _n(dur_s, rate)
    x = np.zeros(n)
    if level == 0:
        return x
    n_click = max(1, _n(0.002, rate))
    for t in np.arange(0.0, dur_s, 1.0 / rep_hz):
        s = _n(t, rate)
        burst = _click(rng, n_click, n_click / 4)[: n - s]
        x[s:s + burst.size] += level * burst
    return x


def _resonator(f_hz: float, bw_hz: float, rate: int):
    r = np.exp(-np.pi * bw_hz / rate)
    theta = 2 * np.pi * f_hz / rate
    return [1.0 - r], [1.0, -2 * r * np.cos(theta), r * r]


def _voiced(n: int, rate: int, phase0: float) -> np.ndarray:
    t = np.arange(n) / rate
    saw = 2.0 * ((VOICE_F0_HZ * t + phase0) % 1.0) - 1.0
    y = saw
    for f, bw in FORMANTS_HZ:
        b, a = _resonator(f, bw, rate)
        y = lfilter(b, a, y)
    return y


def gen_speech_proxy(dur_s: float, level: float, rate: int = CANONICAL_RATE, seed=0) -> np.ndarray:
    """Voiced 120 Hz segments alternating with 50-150 ms high-passed fricative bursts.

    At least one fricative burst falls in every started second.
    """
    if dur_s <= 0:
        raise ValueError("dur_s must be positive")
    rng = _rng(seed)
    n = _n(dur_s, rate)
    x = np.zeros(n)
    sos = butter(4, FRICATIVE_CUTOFF_HZ, btype="highpass", fs=rate, output="sos")
    pos = 0
    while pos < n:
        v_len = _n(rng.uniform(0.15, 0.35), rate)
        f_len = _n(rng.uniform(0.05, 0.15), rate)
        seg = min(v_len, n - pos)
        if seg > 0:
            x[pos:pos + seg] = _set_rms(_voiced(seg, rate, rng.uniform()), level) * \
                raised_cosine_envelope(seg, _n(0.01, rate))
        pos += seg
        seg = min(f_len, n - pos)
        if seg > 0:
            pad = _n(0.02, rate)
            burst = sosfilt(sos, rng.standard_normal(seg + pad))[pad:]
            x[pos:pos + seg] = _set_rms(burst, level) * raised_cosine_envelope(seg, _n(0.01, rate))
        pos += seg
    return x


def gen_exhale(dur_s: float, level: float, rate: int = CANONICAL_RATE, seed=0) -> np.ndarray:
    """Low-band exhalation noise: louder than the inhale and not labelled as breath."""
    rng = _rng(seed)
    n = _n(dur_s, rate)
    sos = butter(2, EXHALE_BAND_HZ, btype="bandpass", fs=rate, output="sos")
    pad = _n(0.05, rate)
    noise = sosfilt(sos, rng.standard_normal(n + pad))[pad:]
    return _set_rms(noise, level) * raised_cosine_envelope(n, _n(0.05, rate))


@dataclass(frozen=True)
class Segment:
    kind: str
    start_s: float
    dur_s: float
    level: float

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.start_s < 0 or self.dur_s <= 0:
            raise ValueError("segments need start_s >= 0 and dur_s > 0")
        if self.level < 0:
            raise ValueError("level must be non-negative")

    @property
    def end_s(self) -> float:
        return self.start_s + self.dur_s


@dataclass(frozen=True)
class SceneScript:
    segments: tuple = ()
    rate: int = CANONICAL_RATE
    seed: int = 0
    duration_s: float | None = None  # defaults to the end of the last segment

    @classmethod
    def from_dict(cls, doc: dict) -> "SceneScript":
        unknown = set(doc) - {"segments", "rate", "seed", "duration_s"}
        if unknown:
            raise ValueError(f"unknown script keys {sorted(unknown)}")
        segs = []
        for s in doc.get("segments", []):
            extra = set(s) - {"kind", "start_s", "dur_s", "level"}
            if extra:
                raise ValueError(f"unknown segment keys {sorted(extra)}")
            segs.append(Segment(s["kind"], float(s["start_s"]), float(s["dur_s"]), float(s["level"])))
        return cls(tuple(segs), int(doc.get("rate", CANONICAL_RATE)), int(doc.get("seed", 0)),
                   doc.get("duration_s"))

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "segments": [vars(s).copy() for s in self.segments],
        }

    def total_duration(self) -> float:
        end = max((s.end_s for s in self.segments), default=0.0)
        return max(end, self.duration_s or 0.0)


@dataclass(frozen=True)
class GroundTruth:
    inhales: list = field(default_factory=list)  # [(start_s, end_s)]

    def to_json(self) -> str:
        return json.dumps({"version": "gt1",
                           "inhales": [{"start_s": a, "end_s": b} for a, b in self.inhales]},
                          indent=1)

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        doc = json.loads(text)
        if doc.get("version") != "gt1":
            raise ValueError("expected ground-truth version 'gt1'")
        return cls([(float(d["start_s"]), float(d["end_s"])) for d in doc["inhales"]])


_GENERATORS = {
    "inhale": gen_inhale,
    "exhale_pause": gen_exhale,
    "speech_proxy": gen_speech_proxy,
    "alarm_overlay": gen_alarm,
}


def check_overlaps(segments) -> None:
    solid = sorted((s for s in segments if s.kind not in ADDITIVE_KINDS), key=lambda s: s.start_s)
    for prev, cur in zip(solid, solid[1:]):
        if cur.start_s < prev.end_s - 1e-12:
            raise OverlapError(
                f"{cur.kind} at {cur.start_s} s overlaps {prev.kind} ending at {prev.end_s} s"
            )


@dataclass(frozen=True, eq=False)
class RenderResult:
    buffer: AudioBuffer
    truth: GroundTruth
    scale: float  # safety gain applied to keep the peak at or below 1


def render_scene(script: SceneScript) -> RenderResult:
    """Sum all segments into one buffer, scaling down only if the peak exceeds 1."""
    check_overlaps(script.segments)
    rate = script.rate
    n = _n(script.total_duration(), rate)
    x = np.zeros(n)
    # per-segment seeds derive from the script seed and the segment index
    seeds = np.random.SeedSequence(script.seed).spawn(len(script.segments))
    for seg, ss in zip(script.segments, seeds):
        if seg.kind == "silence":
            continue
        s = _n(seg.start_s, rate)
        if seg.kind == "noise":
            y = seg.level * _rng(ss).standard_normal(_n(seg.dur_s, rate))
        else:
            y = _GENERATORS[seg.kind](seg.dur_s, seg.level, rate, ss)
        y = y[: max(0, n - s)]
        x[s:s + y.size] += y
    peak = float(np.max(np.abs(x))) if n else 0.0
    scale = 1.0 if peak <= 1.0 else 1.0 / peak
    truth = GroundTruth([(s.start_s, s.end_s) for s in script.segments if s.kind == "inhale"])
    return RenderResult(AudioBuffer(x * scale, rate), truth, scale)


def write_scene(result: RenderResult, out_dir, stem: str = "scene") -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wav = out / f"{stem}.wav"
    truth = out / f"{stem}.truth.json"
    save_wav(result.buffer, wav)
    truth.write_text(result.truth.to_json())
    return wav, truth


def breathing_scene(duration_s: float = 120.0, n_inhales: int = 40, rate_bpm: float = 20.0,
                    seed: int = 0, inhale_level: float = 0.1, speech_level: float = 0.1,
                    exhale_level: float = 0.12, alarm_level: float = 0.05,
                    alarm_from_s: float | None = None, noise_level: float = 0.002,
                    speech: bool = True, rate: int = CANONICAL_RATE) -> SceneScript:
    """Script a regular breathing scene.

    Each cycle is an inhalation (0.6-1.2 s), a short pause, an exhalation
    and, when ``speech`` is set, a speech-proxy confuser in the remaining
    gap. The alarm overlays the scene from ``alarm_from_s`` (default: half
    way) to the end, including over inhalations.
    """
    rng = _rng(seed)
    period = 60.0 / rate_bpm
    segs = [Segment("noise", 0.0, duration_s, noise_level)] if noise_level > 0 else []
    for i in range(n_inhales):
        t0 = 0.5 + i * period + rng.uniform(-0.1, 0.1)
        dur = rng.uniform(0.6, 1.2)
        if t0 + dur > duration_s:
            break
        segs.append(Segment("inhale", round(t0, 4), round(dur, 4), inhale_level))
        t = t0 + dur + rng.uniform(0.1, 0.2)
        ex = rng.uniform(0.5, 0.8)
        segs.append(Segment("exhale_pause", round(t, 4), round(ex, 4), exhale_level))
        t += ex + 0.1
        gap_end = 0.5 + (i + 1) * period - 0.15
        if speech and gap_end - t > 0.3 and t < duration_s:
            segs.append(Segment("speech_proxy", round(t, 4), round(min(gap_end, duration_s) - t, 4),
                                speech_level))
    if alarm_level > 0:
        a0 = duration_s / 2 if alarm_from_s is None else alarm_from_s
        segs.append(Segment("alarm_overlay", a0, duration_s - a0, alarm_level))
    return SceneScript(tuple(segs), rate, seed, duration_s)


def exemplar_set(n: int = 16, seed: int = 100, level: float = 0.1, alarm_level: float = 0.05,
                 noise_level: float = 0.002, alarm_every: int = 2, rate: int = CANONICAL_RATE,
                 dur_range=(0.6, 1.2)) -> list[AudioBuffer]:
    """Isolated inhalation recordings cut from a background of level ``noise_level``.

    Every ``alarm_every``-th exemplar (starting with the first) carries the low
    air alarm at ``alarm_level``; ``alarm_every=1`` corrupts them all.
    """
    rng = _rng(seed)
    out = []
    for i in range(n):
        dur = float(rng.uniform(*dur_range))
        segs = [Segment("inhale", 0.0, dur, level)]
        if noise_level > 0:
            segs.append(Segment("noise", 0.0, dur, noise_level))
        if alarm_level > 0 and alarm_every > 0 and i % alarm_every == 0:
            segs.append(Segment("alarm_overlay", 0.0, dur, alarm_level))
        out.append(render_scene(SceneScript(tuple(segs), rate, seed * 1000 + i)).buffer)
    return out
