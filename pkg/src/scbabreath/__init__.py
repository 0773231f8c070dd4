"""SCBA breath-activity detection toolkit.

Inhalations in mask audio are found three ways: cepstral pattern matching
against a breath template, LPC inverse-filter gain thresholding, and an
LS-SVM over windows of LPC gains. ``synth`` renders labelled scenes for
testing, ``events`` turns detections into rates and duration tables.
"""
from .audio import CANONICAL_RATE, AudioBuffer, load_wav, resample, save_wav
from .cepstral import Cepstrogram, MelConfig, cepstrogram, hz_to_mel, mel_to_hz
from .config import ToolConfig, load_config
from .events import (
    BreathEvent,
    breathing_rates,
    compare,
    durations,
    histogram,
    screen_outliers,
)
from .frontend import FrameConfig, frame_signal
from .lpc import LpcModel, fit_lpc, gain_track, solve_lpc
from .pattern import IndexSeries, breath_index_track, detect_events_pattern
from .pipeline import detect_lpc, detect_lpc_svm, detect_pattern, train_gain_classifier
from .svm import SvmModel, kernel, train
from .template import BreathTemplate, build_template

__all__ = [
    "CANONICAL_RATE", "AudioBuffer", "load_wav", "resample", "save_wav",
    "Cepstrogram", "MelConfig", "cepstrogram", "hz_to_mel", "mel_to_hz",
    "ToolConfig", "load_config",
    "BreathEvent", "breathing_rates", "compare", "durations", "histogram", "screen_outliers",
    "FrameConfig", "frame_signal",
    "LpcModel", "fit_lpc", "gain_track", "solve_lpc",
    "IndexSeries", "breath_index_track", "detect_events_pattern",
    "detect_lpc", "detect_lpc_svm", "detect_pattern", "train_gain_classifier",
    "SvmModel", "kernel", "train",
    "BreathTemplate", "build_template",
]
