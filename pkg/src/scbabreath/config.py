"""Toolkit configuration: one JSON document with a section per module."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .cepstral import MelConfig
from .frontend import FrameConfig


@dataclass(frozen=True)
class PatternConfig:
    threshold: float = 0.25
    min_frames: int = 10
    normalize: bool = True
    target_subframes: int = 30

    def __post_init__(self):
        if self.threshold <= 0 or self.min_frames < 1 or self.target_subframes < 1:
            raise ValueError("pattern: threshold > 0, min_frames >= 1, target_subframes >= 1")


@dataclass(frozen=True)
class LpcConfig:
    order: int = 10
    # frames at or below this residual/input power ratio match the breath model
    gain_threshold: float = 0.8
    min_dur_s: float = 0.2
    max_dur_s: float = 60.0
    min_power_fraction: float = 0.25
    beta: float = 0.05
    adapt: bool = True
    merge_gap_s: float = 0.05

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("lpc: order must be >= 1")
        if not 0 < self.beta <= 1:
            raise ValueError("lpc: beta must be in (0, 1]")
        if not 0 <= self.min_dur_s < self.max_dur_s:
            raise ValueError("lpc: need 0 <= min_dur_s < max_dur_s")
        if self.gain_threshold <= 0:
            raise ValueError("lpc: gain_threshold must be positive")


@dataclass(frozen=True)
class SvmConfig:
    gamma: float = 1e-2
    select_gamma: bool = True
    feature_window: int = 15
    train_fraction: float = 0.7
    seed: int = 0
    max_examples: int = 2500

    def __post_init__(self):
        if self.gamma <= 0 or self.feature_window < 1 or self.max_examples < 4:
            raise ValueError("svm: gamma > 0, feature_window >= 1, max_examples >= 4")
        if not 0 < self.train_fraction < 1:
            raise ValueError("svm: train_fraction must be in (0, 1)")


@dataclass(frozen=True)
class ReportConfig:
    lo_bpm: float = 4.0
    hi_bpm: float = 60.0
    hist_bin_bpm: float = 5.0
    hist_range_bpm: tuple = (0.0, 100.0)
    match_tolerance_s: float = 0.5

    def __post_init__(self):
        if not self.lo_bpm < self.hi_bpm:
            raise ValueError("report: lo_bpm must be below hi_bpm")
        object.__setattr__(self, "hist_range_bpm", tuple(float(v) for v in self.hist_range_bpm))


_SECTIONS = {
    "frontend": FrameConfig,
    "mel": MelConfig,
    "pattern": PatternConfig,
    "lpc": LpcConfig,
    "svm": SvmConfig,
    "report": ReportConfig,
}


@dataclass(frozen=True)
class ToolConfig:
    frontend: FrameConfig = field(default_factory=FrameConfig)
    mel: MelConfig = field(default_factory=MelConfig)
    pattern: PatternConfig = field(default_factory=PatternConfig)
    lpc: LpcConfig = field(default_factory=LpcConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    report: ReportConfig = field(default_factory=ReportConfig)

    @classmethod
    def from_dict(cls, doc: dict) -> "ToolConfig":
        """Build from nested dicts; unknown sections or keys raise ValueError."""
        unknown = set(doc) - set(_SECTIONS)
        if unknown:
            raise ValueError(f"unknown config sections {sorted(unknown)}")
        parts = {}
        for name, typ in _SECTIONS.items():
            section = doc.get(name, {})
            if not isinstance(section, dict):
                raise ValueError(f"config section {name!r} must be an object")
            allowed = {f.name for f in fields(typ)}
            bad = set(section) - allowed
            if bad:
                raise ValueError(f"unknown keys in {name!r}: {sorted(bad)}")
            parts[name] = typ(**section)
        return cls(**parts)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["report"]["hist_range_bpm"] = list(self.report.hist_range_bpm)
        return out

    def override(self, section: str, **values) -> "ToolConfig":
        return replace(self, **{section: replace(getattr(self, section), **values)})


def load_config(path=None) -> ToolConfig:
    if path is None:
        return ToolConfig()
    return ToolConfig.from_dict(json.loads(Path(path).read_text()))
