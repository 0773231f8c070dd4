"""End-to-end detection and SVM training on top of the individual modules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lpc, svm
from .audio import CANONICAL_RATE, AudioBuffer, resample
from .cepstral import cepstrogram
from .config import ToolConfig
from .pattern import IndexSeries, breath_index_track, detect_events_pattern
from .template import BreathTemplate, fingerprint

DETECTOR_NAMES = ("pattern", "lpc", "lpc-svm")


@dataclass(frozen=True, eq=False)
class Detection:
    events: list
    index: IndexSeries  # the score track behind the events, for plotting


def to_canonical(buf: AudioBuffer) -> AudioBuffer:
    return resample(buf, CANONICAL_RATE)


def lpc_gains(buf: AudioBuffer, model: lpc.LpcModel, cfg: ToolConfig) -> lpc.GainSeries:
    if cfg.lpc.adapt:
        return lpc.gain_track(buf, model, cfg.frontend, beta=cfg.lpc.beta,
                              gate_threshold=cfg.lpc.gain_threshold)
    return lpc.gain_track(buf, model, cfg.frontend)


def lpc_detect_config(cfg: ToolConfig) -> lpc.LpcDetectConfig:
    return lpc.LpcDetectConfig(cfg.lpc.gain_threshold, cfg.lpc.min_dur_s, cfg.lpc.max_dur_s,
                               cfg.lpc.min_power_fraction, merge_gap_s=cfg.lpc.merge_gap_s)


def detect_pattern(buf: AudioBuffer, template: BreathTemplate, cfg: ToolConfig) -> Detection:
    template.check_fingerprint(fingerprint(cfg.frontend, cfg.mel, buf.sample_rate))
    cg = cepstrogram(buf, cfg.frontend, cfg.mel)
    series = breath_index_track(cg, template, normalize=cfg.pattern.normalize,
                                frame_len_s=cfg.frontend.frame_len_ms / 1000.0)
    events = detect_events_pattern(series, cfg.pattern.threshold, cfg.pattern.min_frames)
    return Detection(events, IndexSeries(series.values, series.times, series.normalized,
                                         cfg.pattern.threshold, series.window_span_s))


def detect_lpc(buf: AudioBuffer, model: lpc.LpcModel, cfg: ToolConfig) -> Detection:
    gains = lpc_gains(buf, model, cfg)
    events = lpc.detect_events_lpc(gains, lpc_detect_config(cfg))
    return Detection(events, IndexSeries(gains.values, gains.times, False, cfg.lpc.gain_threshold,
                                         gains.frame_len_s))


def detect_lpc_svm(buf: AudioBuffer, model: lpc.LpcModel, classifier: svm.SvmModel,
                   cfg: ToolConfig) -> Detection:
    gains = lpc_gains(buf, model, cfg)
    events = svm.detect_events_svm(gains, classifier, lpc_detect_config(cfg))
    scores = svm.frame_decisions(gains, classifier)
    scores[~np.isfinite(scores)] = 0.0
    return Detection(events, IndexSeries(scores, gains.times, False, 0.0, gains.frame_len_s))


@dataclass(frozen=True, eq=False)
class TrainingReport:
    model: svm.SvmModel
    verification: svm.Evaluation
    n_train: int
    n_verify: int


def train_gain_classifier(recordings, model: lpc.LpcModel, cfg: ToolConfig) -> TrainingReport:
    """Fit the gain-window classifier on (AudioBuffer, truth intervals) pairs.

    Log-gain standardization is estimated over all recordings together, the
    labelled windows are subsampled to ``max_examples`` and split into train
    and verification sets.
    """
    gain_tracks = [(lpc_gains(buf, model, cfg), truth) for buf, truth in recordings]
    all_values = np.concatenate([g.values for g, _ in gain_tracks])
    st = svm.standardization_of(all_values)
    w = cfg.svm.feature_window
    anchor = svm.centred_anchor(w)
    sets = [svm.labeled_gain_set(g, truth, w, st, anchor) for g, truth in gain_tracks]
    data = svm.LabeledSet(np.concatenate([s.features for s in sets]),
                          np.concatenate([s.labels for s in sets]))
    return fit_classifier(data, cfg, st, anchor)


def fit_classifier(data: svm.LabeledSet, cfg: ToolConfig, standardization: dict,
                   anchor: int) -> TrainingReport:
    """Subsample, split, train (optionally choosing gamma) and verify."""
    data = svm.subsample(data, cfg.svm.max_examples, cfg.svm.seed)
    train_set, verify_set = svm.split_train_verify(data, cfg.svm.train_fraction, cfg.svm.seed)
    if cfg.svm.select_gamma:
        fitted, _ = svm.select_gamma(train_set, verify_set)
    else:
        fitted = svm.train(train_set, cfg.svm.gamma)
    fitted = svm.SvmModel(fitted.support_inputs, fitted.dual_weights, fitted.bias, fitted.gamma,
                          fitted.kernel_scale, fitted.kernel_degree, data.features.shape[1],
                          standardization, anchor)
    return TrainingReport(fitted, svm.evaluate(fitted, verify_set), len(train_set), len(verify_set))
