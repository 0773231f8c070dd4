"""Least-squares SVM with the odd cubic kernel ``(0.6 u.v)**3``."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import CorruptFile, DimensionMismatch, IllConditioned, TooShort, TooSmall
from .events import BreathEvent
from .lpc import GainSeries, LpcDetectConfig
from .pattern import merge_runs, runs_of

SVM_VERSION = "svm1"
KERNEL_SCALE = 0.6
KERNEL_DEGREE = 3
RESIDUAL_TOL = 1e-6


def kernel(u, v, scale: float = KERNEL_SCALE, degree: int = KERNEL_DEGREE) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"kernel arguments have shapes {u.shape} and {v.shape}")
    return float((scale * np.dot(u, v)) ** degree)


def kernel_matrix(a, b, scale: float = KERNEL_SCALE, degree: int = KERNEL_DEGREE) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"feature dimensions {a.shape[1]} and {b.shape[1]} differ")
    return (scale * (a @ b.T)) ** degree


@dataclass(frozen=True, eq=False)
class LabeledSet:
    features: np.ndarray  # (n, dim)
    labels: np.ndarray  # +1 / -1

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        y = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if x.shape[0] != y.shape[0]:
            raise DimensionMismatch("one label per feature row is required")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if not np.all(np.isfinite(x)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, idx) -> "LabeledSet":
        return LabeledSet(self.features[idx], self.labels[idx])


def split_train_verify(data: LabeledSet, train_fraction: float = 0.7, seed: int = 0):
    """Stratified random partition; each class keeps at least one member on each side."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, verify_idx = [], []
    for cls in (-1.0, 1.0):
        members = np.flatnonzero(data.labels == cls)
        if members.size < 2:
            raise TooSmall(f"class {int(cls):+d} has {members.size} examples; need at least 2")
        members = rng.permutation(members)
        k = int(round(train_fraction * members.size))
        k = min(max(k, 1), members.size - 1)
        train_idx.append(members[:k])
        verify_idx.append(members[k:])
    return data.subset(np.sort(np.concatenate(train_idx))), data.subset(np.sort(np.concatenate(verify_idx)))


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_inputs: np.ndarray
    dual_weights: np.ndarray
    bias: float
    gamma: float
    kernel_scale: float = KERNEL_SCALE
    kernel_degree: int = KERNEL_DEGREE
    feature_window: int = 1
    standardization: dict = field(default_factory=lambda: {"mean": 0.0, "std": 1.0})
    feature_anchor: int = 0  # position inside the gain window of the frame being labelled

    def __post_init__(self):
        if not 0 <= self.feature_anchor < max(self.feature_window, 1):
            raise ValueError("feature_anchor must index into the feature window")
        if self.dual_weights.shape[0] != self.support_inputs.shape[0]:
            raise DimensionMismatch("one dual weight per support input is required")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def decision_function(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.support_inputs.shape[1]:
            raise DimensionMismatch(
                f"model expects {self.support_inputs.shape[1]} features, got {x.shape[1]}"
            )
        k = kernel_matrix(x, self.support_inputs, self.kernel_scale, self.kernel_degree)
        return k @ self.dual_weights + self.bias

    def predict(self, x) -> np.ndarray:
        return np.where(self.decision_function(x) >= 0, 1, -1)


def train(data: LabeledSet, gamma: float = 1e-2, scale: float = KERNEL_SCALE,
          degree: int = KERNEL_DEGREE, refine_steps: int = 3) -> SvmModel:
    """Solve ``(K + gamma I) alpha = y``; bias is the mean training residual.

    The cubic kernel matrix is not guaranteed positive semidefinite, so the
    system is solved by LU with a few rounds of iterative refinement, and a
    residual above 1e-6 raises IllConditioned.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    x, y = data.features, data.labels
    k = kernel_matrix(x, x, scale, degree)
    a = k + gamma * np.eye(len(y))
    try:
        lu = scipy.linalg.lu_factor(a, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise IllConditioned(str(exc)) from exc
    alpha = scipy.linalg.lu_solve(lu, y)
    for _ in range(refine_steps):
        r = y - a @ alpha
        alpha = alpha + scipy.linalg.lu_solve(lu, r)
    resid = float(np.max(np.abs(a @ alpha - y))) if len(y) else 0.0
    if not np.isfinite(resid) or resid > RESIDUAL_TOL:
        raise IllConditioned(f"linear solve residual {resid:.3g} exceeds {RESIDUAL_TOL}")
    bias = float(np.mean(y - k @ alpha))
    return SvmModel(x.copy(), alpha, bias, float(gamma), scale, degree)


def classify(model: SvmModel, feature) -> tuple[int, float]:
    """Label and raw decision value; an exact zero decision maps to +1."""
    f = np.asarray(feature, dtype=np.float64).reshape(-1)
    value = float(model.decision_function(f[None, :])[0])
    return (1 if value >= 0 else -1), value


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int


def evaluate(model: SvmModel, data: LabeledSet) -> Evaluation:
    if len(data) == 0:
        return Evaluation(float("nan"), 0, 0, 0, 0)
    pred = model.predict(data.features)
    y = data.labels
    tp = int(np.sum((pred == 1) & (y == 1)))
    tn = int(np.sum((pred == -1) & (y == -1)))
    fp = int(np.sum((pred == 1) & (y == -1)))
    fn = int(np.sum((pred == -1) & (y == 1)))
    return Evaluation((tp + tn) / len(y), tp, fp, tn, fn)


def select_gamma(train_set: LabeledSet, verify_set: LabeledSet,
                 grid=(1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2)) -> tuple[SvmModel, float]:
    """Best verification accuracy over a gamma grid; ties go to the smaller gamma."""
    best = None
    for g in grid:
        try:
            m = train(train_set, g)
        except IllConditioned:
            continue
        acc = evaluate(m, verify_set).accuracy
        if best is None or acc > best[1]:
            best = (m, acc)
    if best is None:
        raise IllConditioned("no gamma in the grid produced a well-conditioned system")
    return best


# -- features from the LPC gain track -------------------------------------------

GAIN_FLOOR = 1e-12


def log_gains(gains) -> np.ndarray:
    v = gains.values if isinstance(gains, GainSeries) else np.asarray(gains, dtype=np.float64)
    return np.log(np.maximum(v, GAIN_FLOOR))


def standardization_of(gains) -> dict:
    lg = log_gains(gains)
    std = float(lg.std())
    return {"mean": float(lg.mean()), "std": std if std > 0 else 1.0}


def gain_features(gains, window: int = 15, standardization: dict | None = None) -> np.ndarray:
    """Row t holds the standardized log-gains of frames t .. t + window - 1."""
    if window < 1:
        raise ValueError("window must be >= 1")
    lg = log_gains(gains)
    if lg.shape[0] < window:
        raise TooShort(f"gain series of {lg.shape[0]} frames is shorter than window {window}")
    st = standardization or standardization_of(gains)
    z = (lg - st["mean"]) / st["std"]
    return np.lib.stride_tricks.sliding_window_view(z, window).copy()


def frame_labels(times, truth, frame_len_s: float) -> np.ndarray:
    """+1 for frames whose centre lies inside a truth interval."""
    centres = np.asarray(times) + frame_len_s / 2
    lab = -np.ones(centres.shape[0])
    for a, b in truth:
        lab[(centres >= a) & (centres < b)] = 1.0
    return lab


def centred_anchor(window: int) -> int:
    return window // 2


def labeled_gain_set(gains: GainSeries, truth, window: int,
                     standardization: dict | None = None, anchor: int | None = None) -> LabeledSet:
    """Feature row t is labelled by the frame at ``t + anchor`` (centred by default)."""
    anchor = centred_anchor(window) if anchor is None else anchor
    feats = gain_features(gains, window, standardization)
    labels = frame_labels(gains.times, truth, gains.frame_len_s)[anchor:anchor + feats.shape[0]]
    return LabeledSet(feats, labels)


def subsample(data: LabeledSet, max_examples: int, seed: int) -> LabeledSet:
    """Stratified random subset capping the kernel matrix size."""
    if len(data) <= max_examples:
        return data
    rng = np.random.default_rng(seed)
    keep = []
    for cls in (-1.0, 1.0):
        members = np.flatnonzero(data.labels == cls)
        k = int(round(max_examples * members.size / len(data)))
        keep.append(rng.choice(members, size=min(max(k, 2), members.size), replace=False))
    return data.subset(np.sort(np.concatenate(keep)))


def frame_decisions(gains: GainSeries, model: SvmModel) -> np.ndarray:
    """Decision value per gain frame; frames without a full window get -inf."""
    w = model.feature_window
    out = np.full(len(gains), -np.inf)
    if len(gains) < w:
        return out
    feats = gain_features(gains, w, model.standardization)
    out[model.feature_anchor:model.feature_anchor + feats.shape[0]] = model.decision_function(feats)
    return out


def detect_events_svm(gains: GainSeries, model: SvmModel,
                      cfg: LpcDetectConfig = LpcDetectConfig()) -> list[BreathEvent]:
    """Classify every frame with a full window around it, merge short gaps,
    and keep breath runs passing the duration screen."""
    frame_values = frame_decisions(gains, model)
    step = float(gains.times[1] - gains.times[0]) if len(gains) > 1 else 0.0
    events = []
    for a, b in merge_runs(runs_of(frame_values >= 0), cfg.gap_frames(step)):
        start = gains.times[a]
        end = gains.times[b - 1] + gains.frame_len_s
        dur = end - start
        if cfg.min_dur_s <= dur <= cfg.max_dur_s:
            events.append(BreathEvent.span(start, end, float(frame_values[a:b].max()), "lpc_svm"))
    return events


def save_svm(model: SvmModel, path) -> None:
    doc = {
        "version": SVM_VERSION,
        "support_inputs": model.support_inputs.tolist(),
        "dual_weights": model.dual_weights.tolist(),
        "bias": model.bias,
        "gamma": model.gamma,
        "kernel_scale": model.kernel_scale,
        "kernel_degree": model.kernel_degree,
        "feature_window": model.feature_window,
        "feature_anchor": model.feature_anchor,
        "standardization": model.standardization,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True))


def load_svm(path) -> SvmModel:
    try:
        doc = json.loads(Path(path).read_text())
        if doc.get("version") != SVM_VERSION:
            raise CorruptFile(f"{path}: expected version {SVM_VERSION!r}")
        return SvmModel(
            np.atleast_2d(np.array(doc["support_inputs"], dtype=np.float64)),
            np.array(doc["dual_weights"], dtype=np.float64),
            float(doc["bias"]),
            float(doc["gamma"]),
            float(doc["kernel_scale"]),
            int(doc["kernel_degree"]),
            int(doc["feature_window"]),
            dict(doc["standardization"]),
            int(doc["feature_anchor"]),
        )
    except CorruptFile:
        raise
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
