import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.io import wavfile

from scbabreath.audio import AudioBuffer, load_wav, resample, save_wav
from scbabreath.errors import CorruptHeader, EmptyAudio, UnsupportedFormat


def _dft_peak_hz(x, rate):
    # direct O(N^2) DFT magnitude, no FFT involved
    n = len(x)
    k = np.arange(n // 2 + 1)
    basis = np.exp(-2j * np.pi * np.outer(k, np.arange(n)) / n)
    return np.argmax(np.abs(basis @ x)) * rate / n


def test_pcm16_scaling(tmp_path):
    p = tmp_path / "a.wav"
    wavfile.write(p, 8000, np.array([16384, -16384], dtype=np.int16))
    assert load_wav(p).samples.tolist() == [0.5, -0.5]


def test_stereo_is_averaged(tmp_path):
    p = tmp_path / "s.wav"
    wavfile.write(p, 8000, np.array([[0.2, 0.4]], dtype=np.float32))
    assert load_wav(p).samples[0] == pytest.approx(0.3, abs=1e-7)


def test_duration_from_header(tmp_path):
    p = tmp_path / "d.wav"
    wavfile.write(p, 44100, np.zeros(44100, dtype=np.int16))
    assert load_wav(p).duration == pytest.approx(1.0)


def test_float32_roundtrip(tmp_path):
    x = np.linspace(-0.9, 0.9, 101)
    save_wav(AudioBuffer(x, 16000), tmp_path / "f.wav", fmt="float32")
    back = load_wav(tmp_path / "f.wav")
    assert np.allclose(back.samples, x, atol=1e-7)


def test_pcm16_roundtrip_within_one_lsb(tmp_path):
    x = np.random.default_rng(0).uniform(-0.99, 0.99, 500)
    save_wav(AudioBuffer(x, 16000), tmp_path / "p.wav")
    assert np.max(np.abs(load_wav(tmp_path / "p.wav").samples - x)) <= 0.5 / 32768 + 1e-12


def test_rejects_8bit(tmp_path):
    p = tmp_path / "u8.wav"
    wavfile.write(p, 8000, np.array([0, 128, 255], dtype=np.uint8))
    with pytest.raises(UnsupportedFormat):
        load_wav(p)


def test_rejects_garbage(tmp_path):
    p = tmp_path / "junk.wav"
    p.write_bytes(b"hello world, not audio")
    with pytest.raises(CorruptHeader):
        load_wav(p)


def test_truncated_fmt_chunk(tmp_path):
    p = tmp_path / "t.wav"
    p.write_bytes(b"RIFF" + struct.pack("<I", 20) + b"WAVEfmt " + struct.pack("<I", 16) + b"\x01\x00")
    with pytest.raises(CorruptHeader):
        load_wav(p)


def test_empty_data(tmp_path):
    p = tmp_path / "e.wav"
    wavfile.write(p, 8000, np.zeros(0, dtype=np.int16))
    with pytest.raises(EmptyAudio):
        load_wav(p)


def test_buffer_invariants():
    with pytest.raises(ValueError):
        AudioBuffer([0.0, np.nan], 8000)
    with pytest.raises(ValueError):
        AudioBuffer([0.0], 0)
    b = AudioBuffer([0.5, -2.0], 8000).peak_normalized()
    assert np.max(np.abs(b.samples)) == 1.0


def test_resample_identity_is_bit_identical():
    x = np.random.default_rng(1).standard_normal(800)
    b = AudioBuffer(x, 8000)
    assert np.array_equal(resample(b, 8000).samples, x)


def test_resample_length_ratio():
    assert len(resample(AudioBuffer(np.zeros(100), 16000), 8000)) == 50


def test_resampled_tone_keeps_its_frequency():
    rate = 44100
    t = np.arange(rate) / rate
    out = resample(AudioBuffer(np.sin(2 * np.pi * 440 * t), rate), 16000)
    # analyse a 4000-sample stretch: bin width 4 Hz
    seg = out.samples[6000:10000]
    assert abs(_dft_peak_hz(seg, 16000) - 440) <= 16000 / len(seg)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 400), src=st.sampled_from([8000, 11025, 22050, 44100, 48000]))
def test_resample_output_length(n, src):
    out = resample(AudioBuffer(np.zeros(n), src), 16000)
    assert len(out) == round(n * 16000 / src)
