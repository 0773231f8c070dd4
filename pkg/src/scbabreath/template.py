"""Breath templates: mean and deviation cepstrograms plus the leading singular vector."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioBuffer
from .cepstral import MelConfig, cepstrogram
from .errors import (
    ConfigMismatch,
    CorruptFile,
    FingerprintMismatch,
    ShapeMismatch,
    TooFewExemplars,
    TooShort,
)
from .frontend import FrameConfig

TEMPLATE_VERSION = "bt1"
VARIANCE_REL_FLOOR = 1e-6
VARIANCE_ABS_FLOOR = 1e-9


def fingerprint(fcfg: FrameConfig, mcfg: MelConfig, sample_rate: int) -> dict:
    return {"frame": fcfg.to_dict(), "mel": mcfg.to_dict(), "sample_rate": int(sample_rate)}


@dataclass(frozen=True, eq=False)
class BreathTemplate:
    mean: np.ndarray  # (num_coeffs, width)
    variance: np.ndarray  # elementwise sample standard deviation, floored
    singular: np.ndarray  # (num_coeffs,)
    fingerprint: dict = field(default_factory=dict)
    n_exemplars: int = 0

    def __post_init__(self):
        if self.mean.shape != self.variance.shape:
            raise ShapeMismatch("mean and variance shapes differ")
        if self.singular.shape != (self.mean.shape[0],):
            raise ShapeMismatch("singular vector length must equal number of coefficients")
        if np.any(self.variance <= 0):
            raise ValueError("variance entries must be positive")

    @property
    def width(self) -> int:
        return self.mean.shape[1]

    def check_fingerprint(self, expected: dict) -> None:
        if self.fingerprint != expected:
            raise FingerprintMismatch(
                f"template built with {self.fingerprint}, current session uses {expected}"
            )


def remove_dc(columns: np.ndarray) -> np.ndarray:
    """Subtract each column's mean over the cepstral coefficients."""
    return columns - columns.mean(axis=0, keepdims=True)


def fit_width(columns: np.ndarray, width: int) -> np.ndarray:
    """Truncate, or right-pad with the exemplar's mean column, to ``width`` columns."""
    n = columns.shape[1]
    if n >= width:
        return columns[:, :width]
    pad = np.repeat(columns.mean(axis=1, keepdims=True), width - n, axis=1)
    return np.concatenate([columns, pad], axis=1)


def _order_free_sum(stack: np.ndarray) -> np.ndarray:
    # sorting along the exemplar axis makes the sum independent of input order
    return np.sort(stack, axis=0).sum(axis=0)


def leading_singular_vector(matrix: np.ndarray) -> np.ndarray:
    u, _, _ = np.linalg.svd(matrix, full_matrices=False)
    s1 = u[:, 0].copy()
    if s1[np.argmax(np.abs(s1))] < 0:
        s1 = -s1
    return s1


def template_from_matrices(mats, fp: dict | None = None) -> BreathTemplate:
    """Mean, floored sample deviation and S_1 from congruent cepstral matrices."""
    stack = np.stack([np.asarray(m, dtype=np.float64) for m in mats])
    n = stack.shape[0]
    if n < 2:
        raise TooFewExemplars(f"need at least 2 exemplars, got {n}")
    mean = _order_free_sum(stack) / n
    dev = np.sqrt(_order_free_sum((stack - mean) ** 2) / (n - 1))
    floor = max(VARIANCE_REL_FLOOR * float(dev.max()), VARIANCE_ABS_FLOOR)
    dev = np.maximum(dev, floor)
    return BreathTemplate(mean, dev, leading_singular_vector(mean), dict(fp or {}), n)


def build_template(
    exemplars,
    fcfg: FrameConfig,
    mcfg: MelConfig,
    target_subframes: int = 30,
) -> BreathTemplate:
    """Build a template from exemplar recordings.

    Each exemplar becomes a cepstrogram whose columns are DC-removed, then
    truncated or padded to ``target_subframes`` columns before averaging.
    """
    exemplars = list(exemplars)
    if len(exemplars) < 2:
        raise TooFewExemplars(f"need at least 2 exemplars, got {len(exemplars)}")
    rates = {b.sample_rate for b in exemplars}
    if len(rates) != 1:
        raise ConfigMismatch(f"exemplars have mixed sample rates {sorted(rates)}")
    mats = []
    for i, buf in enumerate(exemplars):
        try:
            cg = cepstrogram(buf, fcfg, mcfg)
        except TooShort as exc:
            raise ShapeMismatch(f"exemplar {i} is shorter than one frame") from exc
        mats.append(fit_width(remove_dc(cg.columns), target_subframes))
    return template_from_matrices(mats, fingerprint(fcfg, mcfg, rates.pop()))


def save_template(t: BreathTemplate, path) -> None:
    doc = {
        "version": TEMPLATE_VERSION,
        "mean": t.mean.tolist(),
        "variance": t.variance.tolist(),
        "singular": t.singular.tolist(),
        "fingerprint": t.fingerprint,
        "n_exemplars": t.n_exemplars,
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_template(path, expected_fingerprint: dict | None = None) -> BreathTemplate:
    try:
        doc = json.loads(Path(path).read_text())
        if doc.get("version") != TEMPLATE_VERSION:
            raise CorruptFile(f"{path}: expected version {TEMPLATE_VERSION!r}")
        t = BreathTemplate(
            np.array(doc["mean"], dtype=np.float64),
            np.array(doc["variance"], dtype=np.float64),
            np.array(doc["singular"], dtype=np.float64),
            doc["fingerprint"],
            int(doc["n_exemplars"]),
        )
    except CorruptFile:
        raise
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if t.mean.ndim != 2:
        raise CorruptFile(f"{path}: mean must be a matrix")
    if expected_fingerprint is not None:
        t.check_fingerprint(expected_fingerprint)
    return t
