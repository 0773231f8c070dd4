"""Periodogram, mel filterbank, DCT and liftering: MFCC cepstrograms."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .audio import AudioBuffer
from .errors import DegenerateBank
from .frontend import FrameConfig, frame_signal

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class MelConfig:
    num_filters: int = 26
    num_coeffs: int = 13
    fft_size: int = 512
    fmin_hz: float = 50.0
    fmax_hz: float = 8000.0
    lifter_L: float = 22.0

    def __post_init__(self):
        if self.num_filters < 1 or self.num_coeffs < 1:
            raise ValueError("num_filters and num_coeffs must be positive")
        if self.num_coeffs > self.num_filters:
            raise ValueError("num_coeffs must not exceed num_filters")
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")
        if not 0 <= self.fmin_hz < self.fmax_hz:
            raise ValueError("need 0 <= fmin_hz < fmax_hz")
        if self.lifter_L <= 0:
            raise ValueError("lifter_L must be positive")

    def check_rate(self, sample_rate: int) -> None:
        if self.fmax_hz > sample_rate / 2:
            raise ValueError(f"fmax_hz {self.fmax_hz} exceeds Nyquist for {sample_rate} Hz")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Cepstrogram:
    columns: np.ndarray  # (num_coeffs, num_frames)
    times: np.ndarray

    @property
    def num_columns(self) -> int:
        return self.columns.shape[1]

    def to_csv(self, path) -> None:
        """Rows are coefficients, columns are frames; first row holds times."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["time_s"] + [repr(float(t)) for t in self.times])
            for i, row in enumerate(self.columns, start=1):
                w.writerow([f"c{i}"] + [repr(float(v)) for v in row])


def power_spectrum(frame, fft_size: int, onesided: bool = True) -> np.ndarray:
    """Squared DFT magnitude of the zero-padded frame."""
    x = np.asarray(frame, dtype=np.float64)
    if x.shape[-1] > fft_size:
        raise ValueError("frame longer than fft_size")
    spec = np.fft.rfft(x, fft_size) if onesided else np.fft.fft(x, fft_size)
    return spec.real**2 + spec.imag**2


def periodogram(frame, fft_size: int) -> np.ndarray:
    """Half-spectrum periodogram, the squared spectrum divided by frame length."""
    x = np.asarray(frame, dtype=np.float64)
    return power_spectrum(x, fft_size) / x.shape[-1]


def hz_to_mel(f):
    return 1125.0 * np.log1p(np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * np.expm1(np.asarray(m, dtype=np.float64) / 1125.0)


def mel_points(cfg: MelConfig) -> np.ndarray:
    """The num_filters + 2 band edges in Hz, equally spaced on the mel scale."""
    mels = np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.num_filters + 2)
    return mel_to_hz(mels)


def build_filterbank(cfg: MelConfig, sample_rate: int) -> np.ndarray:
    """Unit-peak triangular filters on FFT bins, shape (num_filters, fft_size//2 + 1)."""
    cfg.check_rate(sample_rate)
    n_bins = cfg.fft_size // 2 + 1
    edges = np.round(mel_points(cfg) * cfg.fft_size / sample_rate).astype(int)
    if np.any(np.diff(edges) <= 0):
        raise DegenerateBank(
            "adjacent mel points snap to the same FFT bin; use fewer filters or a larger fft_size"
        )
    k = np.arange(n_bins, dtype=np.float64)
    bank = np.zeros((cfg.num_filters, n_bins))
    for m in range(1, cfg.num_filters + 1):
        lo, mid, hi = edges[m - 1], edges[m], edges[m + 1]
        rise = (k - lo) / (mid - lo)
        fall = (hi - k) / (hi - mid)
        bank[m - 1] = np.clip(np.minimum(rise, fall), 0.0, None)
    return bank


def lifter_weights(num_coeffs: int, L: float) -> np.ndarray:
    n = np.arange(1, num_coeffs + 1)
    return 1.0 + (L / 2.0) * np.sin(np.pi * n / L)


def lifter(c, L: float) -> np.ndarray:
    """Sinusoidal lifter over 1-based coefficient indices (works on columns too)."""
    if L <= 0:
        raise ValueError("L must be positive")
    c = np.asarray(c, dtype=np.float64)
    w = lifter_weights(c.shape[0], L)
    return c * w.reshape((-1,) + (1,) * (c.ndim - 1))


def dct_matrix(num_coeffs: int, num_filters: int) -> np.ndarray:
    i = np.arange(1, num_coeffs + 1)[:, None]
    j = np.arange(1, num_filters + 1)[None, :]
    return np.sqrt(2.0 / num_filters) * np.cos(np.pi * i * (j - 0.5) / num_filters)


def mfcc(frame_power, bank: np.ndarray, cfg: MelConfig) -> np.ndarray:
    """Liftered c_1..c_K from a power spectrum.

    Accepts a single spectrum or a (bins, frames) matrix of spectra.
    """
    p = np.asarray(frame_power, dtype=np.float64)
    if bank.shape[1] != p.shape[0]:
        raise ValueError(f"filterbank has {bank.shape[1]} bins, spectrum has {p.shape[0]}")
    logs = np.log(np.maximum(bank @ p, LOG_FLOOR))
    c = dct_matrix(cfg.num_coeffs, bank.shape[0]) @ logs
    return lifter(c, cfg.lifter_L)


def real_cepstrum(frame) -> np.ndarray:
    x = np.asarray(frame, dtype=np.float64)
    mag = np.abs(np.fft.fft(x))
    return np.fft.ifft(np.log(np.maximum(mag, LOG_FLOOR))).real


def cepstrogram(buf: AudioBuffer, fcfg: FrameConfig, mcfg: MelConfig) -> Cepstrogram:
    seq = frame_signal(buf, fcfg)
    if seq.frames.shape[1] > mcfg.fft_size:
        raise ValueError(
            f"frame of {seq.frames.shape[1]} samples exceeds fft_size {mcfg.fft_size}"
        )
    bank = build_filterbank(mcfg, buf.sample_rate)
    power = periodogram(seq.frames, mcfg.fft_size).T  # (bins, frames)
    return Cepstrogram(mfcc(power, bank, mcfg), seq.frame_times.copy())
