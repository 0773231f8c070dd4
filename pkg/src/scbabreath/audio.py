"""WAV decoding, encoding and resampling into a canonical mono float buffer."""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import CorruptHeader, EmptyAudio, UnsupportedFormat

CANONICAL_RATE = 16000

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono sample sequence with its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise ValueError("audio samples must be finite")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def peak_normalized(self) -> "AudioBuffer":
        peak = np.max(np.abs(self.samples)) if len(self) else 0.0
        if peak == 0:
            return self
        return AudioBuffer(self.samples / peak, self.sample_rate)


def _check_header(path: Path) -> None:
    """Classify a file as corrupt or unsupported before handing it to scipy."""
    with open(path, "rb") as f:
        head = f.read(12)
        if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
            raise CorruptHeader(f"{path}: not a RIFF/WAVE file")
        while True:
            chunk = f.read(8)
            if len(chunk) < 8:
                raise CorruptHeader(f"{path}: no fmt chunk")
            cid, size = struct.unpack("<4sI", chunk)
            if cid == b"fmt ":
                body = f.read(size)
                if len(body) < 16:
                    raise CorruptHeader(f"{path}: truncated fmt chunk")
                tag, channels, _rate, _bps, _align, bits = struct.unpack("<HHIIHH", body[:16])
                if tag == _WAVE_FORMAT_EXTENSIBLE and len(body) >= 26:
                    tag = struct.unpack("<H", body[24:26])[0]
                if (tag, bits) not in ((_WAVE_FORMAT_PCM, 16), (_WAVE_FORMAT_IEEE_FLOAT, 32)):
                    raise UnsupportedFormat(f"{path}: format tag {tag} with {bits} bits per sample")
                if channels not in (1, 2):
                    raise UnsupportedFormat(f"{path}: {channels} channels")
                return
            f.seek(size + (size & 1), 1)


def load_wav(path) -> AudioBuffer:
    """Read a PCM16 or float32 WAV file, averaging stereo to mono.

    Integer samples are scaled by 1/32768 so the result lies in [-1, 1).
    """
    path = Path(path)
    _check_header(path)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except (ValueError, EOFError, struct.error) as exc:
        raise CorruptHeader(f"{path}: {exc}") from exc
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        x = data.astype(np.float64)
    else:
        raise UnsupportedFormat(f"{path}: sample dtype {data.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.size == 0:
        raise EmptyAudio(f"{path}: no samples")
    return AudioBuffer(x, rate)


def save_wav(buf: AudioBuffer, path, fmt: str = "pcm16") -> None:
    """Write a mono WAV file; ``fmt`` is ``"pcm16"`` or ``"float32"``."""
    if fmt == "pcm16":
        data = np.clip(np.round(buf.samples * 32768.0), -32768, 32767).astype(np.int16)
    elif fmt == "float32":
        data = buf.samples.astype(np.float32)
    else:
        raise UnsupportedFormat(f"unknown output format {fmt!r}")
    wavfile.write(Path(path), buf.sample_rate, data)


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Polyphase resampling with a linear-phase anti-aliasing FIR."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == buf.sample_rate:
        return buf
    ratio = Fraction(int(target_rate), buf.sample_rate)
    y = resample_poly(buf.samples, ratio.numerator, ratio.denominator)
    n_out = int(round(len(buf) * target_rate / buf.sample_rate))
    if y.shape[0] >= n_out:
        y = y[:n_out]
    else:
        y = np.concatenate([y, np.zeros(n_out - y.shape[0])])
    return AudioBuffer(y, target_rate)
