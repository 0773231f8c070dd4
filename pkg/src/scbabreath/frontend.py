"""Short-time analysis: pre-emphasis, windowing and framing."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .audio import AudioBuffer
from .errors import TooShort

WINDOW_KINDS = ("hamming", "half_hamming", "rectangular")


@dataclass(frozen=True)
class FrameConfig:
    # 15 ms frames sharing 5 ms with their neighbour -> 10 ms hop
    frame_len_ms: float = 15.0
    step_ms: float = 10.0
    pre_emphasis_alpha: float = 0.97
    window_kind: str = "half_hamming"

    def __post_init__(self):
        if not 5 <= self.frame_len_ms <= 100:
            raise ValueError(f"frame_len_ms must be in [5, 100], got {self.frame_len_ms}")
        if not 0 < self.step_ms <= self.frame_len_ms:
            raise ValueError("step_ms must satisfy 0 < step_ms <= frame_len_ms")
        if not 0 <= self.pre_emphasis_alpha <= 1:
            raise ValueError("pre_emphasis_alpha must be in [0, 1]")
        if self.window_kind not in WINDOW_KINDS:
            raise ValueError(f"window_kind must be one of {WINDOW_KINDS}")

    def frame_length(self, sample_rate: int) -> int:
        return int(round(self.frame_len_ms * sample_rate / 1000.0))

    def step_length(self, sample_rate: int) -> int:
        return int(round(self.step_ms * sample_rate / 1000.0))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class FrameSequence:
    frames: np.ndarray  # (num_frames, samples_per_frame)
    frame_times: np.ndarray  # start of each frame, seconds
    config: FrameConfig
    sample_rate: int

    def __len__(self):
        return self.frames.shape[0]


def pre_emphasize(samples, alpha: float) -> np.ndarray:
    """First-order difference filter ``y[n] = x[n] - alpha * x[n-1]``."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must be in [0, 1]")
    x = np.asarray(samples, dtype=np.float64)
    y = x.copy()
    y[1:] -= alpha * x[:-1]
    return y


def make_window(length: int, kind: str = "hamming") -> np.ndarray:
    """Analysis window weights.

    ``half_hamming`` keeps the falling half of a Hamming window and sets the
    leading half (``n < length / 2``) to one.
    """
    if length < 2:
        raise ValueError("window length must be >= 2")
    n = np.arange(length)
    if kind == "rectangular":
        return np.ones(length)
    w = 0.54 - 0.46 * np.cos(2 * np.pi * n / (length - 1))
    if kind == "hamming":
        return w
    if kind == "half_hamming":
        w[n < length / 2] = 1.0
        return w
    raise ValueError(f"unknown window kind {kind!r}")


def frame_signal(buf: AudioBuffer, cfg: FrameConfig) -> FrameSequence:
    """Pre-emphasize the whole signal, then cut windowed frames at a fixed hop.

    The trailing partial frame is dropped.
    """
    rate = buf.sample_rate
    flen = cfg.frame_length(rate)
    hop = cfg.step_length(rate)
    if len(buf) < flen:
        raise TooShort(f"signal of {len(buf)} samples is shorter than one frame ({flen})")
    y = pre_emphasize(buf.samples, cfg.pre_emphasis_alpha)
    n_frames = (len(buf) - flen) // hop + 1
    idx = np.arange(flen)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = y[idx] * make_window(flen, cfg.window_kind)[None, :]
    times = hop * np.arange(n_frames) / rate
    return FrameSequence(frames, times, cfg, rate)


def raw_frames(samples: np.ndarray, flen: int, hop: int) -> np.ndarray:
    """Unwindowed frame view used by the gain analysis."""
    n_frames = (len(samples) - flen) // hop + 1
    if n_frames < 1:
        return np.zeros((0, flen))
    idx = np.arange(flen)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]
