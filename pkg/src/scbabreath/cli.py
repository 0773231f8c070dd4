"""Command-line front end: template, detect, synth, train-svm, report, compare.

Exit codes: 0 success, 2 bad input or missing model, 3 audio decode failure,
4 configuration or fingerprint mismatch, 5 ill-conditioned SVM system.
Outputs written before a failure are removed.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import events as ev
from . import lpc, pipeline, svm, synth
from .audio import AudioBuffer, load_wav, save_wav
from .config import ToolConfig, load_config
from .errors import (
    BreathError,
    ConfigMismatch,
    CorruptHeader,
    EmptyAudio,
    IllConditioned,
    UnsupportedFormat,
)
from .template import build_template, fingerprint, load_template, save_template

EXIT_OK, EXIT_INPUT, EXIT_DECODE, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4, 5
GAIN_COLUMNS = ["time_s", "gain", "label"]


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class Outputs:
    """Output paths created by one command, so a failure can remove them."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / name
        self.paths.append(p)
        return p

    def discard(self) -> None:
        for p in self.paths:
            p.unlink(missing_ok=True)


def _read_audio(path) -> AudioBuffer:
    if not Path(path).is_file():
        raise CliError(EXIT_DECODE, f"cannot read audio {path}")
    return pipeline.to_canonical(load_wav(path))


def _need_file(path, what: str) -> Path:
    if path is None or not Path(path).is_file():
        raise CliError(EXIT_INPUT, f"missing {what} file: {path}")
    return Path(path)


def _echo_config(cfg: ToolConfig, outs: Outputs) -> None:
    outs.path("config.echo.json").write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n")


def _write_derived(events, cfg: ToolConfig, outs: Outputs, with_hist: bool):
    rates = ev.breathing_rates(events)
    rc = cfg.report
    ev.write_rates_csv(rates, outs.path("rates.csv"), rc.lo_bpm, rc.hi_bpm)
    ev.write_durations_csv(events, outs.path("durations.csv"))
    kept, flagged = ev.screen_outliers(rates, rc.lo_bpm, rc.hi_bpm)
    hist = ev.histogram(kept.rate_bpm, rc.hist_bin_bpm, rc.hist_range_bpm)
    if with_hist:
        ev.write_hist_csv(hist, outs.path("hist.csv"))
    return rates, kept, flagged, hist


# -- commands -----------------------------------------------------------------

def cmd_template(args, cfg: ToolConfig, outs: Outputs) -> None:
    src = Path(args.exemplar_dir)
    if not src.is_dir():
        raise CliError(EXIT_INPUT, f"not a directory: {src}")
    wavs = sorted(p for p in src.iterdir() if p.suffix.lower() == ".wav")
    buffers = [_read_audio(p) for p in wavs]
    t = build_template(buffers, cfg.frontend, cfg.mel, cfg.pattern.target_subframes)
    model = lpc.fit_lpc(buffers, cfg.lpc.order, cfg.frontend)
    save_template(t, outs.path("template.json"))
    lpc.save_lpc(model, outs.path("lpc.json"))
    _echo_config(cfg, outs)
    print(f"exemplars={t.n_exemplars} template_shape={t.mean.shape[0]}x{t.mean.shape[1]} "
          f"lpc_order={model.order}")


def cmd_detect(args, cfg: ToolConfig, outs: Outputs) -> None:
    overrides = {}
    if args.threshold is not None:
        overrides["threshold"] = args.threshold
    if args.min_frames is not None:
        overrides["min_frames"] = args.min_frames
    if overrides:
        cfg = cfg.override("pattern", **overrides)
    overrides = {}
    if args.gain_threshold is not None:
        overrides["gain_threshold"] = args.gain_threshold
    if args.min_dur is not None:
        overrides["min_dur_s"] = args.min_dur
    if overrides:
        cfg = cfg.override("lpc", **overrides)

    if args.detector == "pattern":
        t = load_template(_need_file(args.template, "template"))
        buf = _read_audio(args.audio)
        t.check_fingerprint(fingerprint(cfg.frontend, cfg.mel, buf.sample_rate))
        det = pipeline.detect_pattern(buf, t, cfg)
    else:
        model = lpc.load_lpc(_need_file(args.lpc, "LPC model"))
        if model.order != cfg.lpc.order:
            raise ConfigMismatch(f"LPC model has order {model.order}, config asks for {cfg.lpc.order}")
        if args.detector == "lpc":
            buf = _read_audio(args.audio)
            det = pipeline.detect_lpc(buf, model, cfg)
        else:
            classifier = svm.load_svm(_need_file(args.svm, "SVM model"))
            buf = _read_audio(args.audio)
            det = pipeline.detect_lpc_svm(buf, model, classifier, cfg)

    ev.write_events_csv(det.events, outs.path("events.csv"))
    _write_derived(det.events, cfg, outs, with_hist=False)
    with open(outs.path("index.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["time_s", "score"])
        for t_, v in zip(det.index.times, det.index.values):
            w.writerow([repr(float(t_)), repr(float(v))])
    _echo_config(cfg, outs)
    print(f"detector={args.detector} events={len(det.events)}")


def cmd_synth(args, cfg: ToolConfig, outs: Outputs) -> None:
    try:
        doc = json.loads(Path(args.script).read_text())
        if not isinstance(doc, dict):
            raise ValueError("script must be a JSON object")
        script = synth.SceneScript.from_dict(doc)
        if args.seed is not None:
            script = synth.SceneScript(script.segments, script.rate, args.seed, script.duration_s)
        result = synth.render_scene(script)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_INPUT, f"invalid script {args.script}: {exc}") from exc
    save_wav(result.buffer, outs.path("scene.wav"))
    outs.path("scene.truth.json").write_text(result.truth.to_json() + "\n")
    print(f"duration_s={result.buffer.duration:.3f} inhales={len(result.truth.inhales)} "
          f"scale={result.scale:.6g}")


def _read_gain_csv(path) -> np.ndarray:
    try:
        with open(path, newline="") as f:
            rows = [r for r in csv.reader(f) if r]
        if not rows or rows[0] != GAIN_COLUMNS:
            raise ValueError(f"expected header {GAIN_COLUMNS}")
        arr = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64).reshape(-1, 3)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"malformed gain CSV {path}: {exc}") from exc
    return arr


def cmd_train_svm(args, cfg: ToolConfig, outs: Outputs) -> None:
    if args.seed is not None:
        cfg = cfg.override("svm", seed=args.seed)
    if args.gains is not None:
        arr = _read_gain_csv(args.gains)
        gains = lpc.GainSeries(arr[:, 1], arr[:, 0], np.ones(arr.shape[0]),
                               cfg.frontend.frame_len_ms / 1000.0)
        w = cfg.svm.feature_window
        anchor = svm.centred_anchor(w)
        st = svm.standardization_of(gains)
        feats = svm.gain_features(gains, w, st)
        labels = np.where(arr[anchor:anchor + feats.shape[0], 2] > 0, 1.0, -1.0)
        report = pipeline.fit_classifier(svm.LabeledSet(feats, labels), cfg, st, anchor)
    else:
        if not args.audio or len(args.audio) != len(args.truth or []):
            raise CliError(EXIT_INPUT, "give --gains, or matching --audio/--truth pairs")
        lpc_model = lpc.load_lpc(_need_file(args.lpc, "LPC model"))
        recordings = []
        for a, t in zip(args.audio, args.truth):
            try:
                truth = ev.read_truth_json(_need_file(t, "truth"))
            except (ValueError, KeyError, TypeError) as exc:
                raise CliError(EXIT_INPUT, f"malformed truth {t}: {exc}") from exc
            recordings.append((_read_audio(a), truth))
        report = pipeline.train_gain_classifier(recordings, lpc_model, cfg)
    svm.save_svm(report.model, outs.path("svm.json"))
    _echo_config(cfg, outs)
    e = report.verification
    print(f"gamma={report.model.gamma:g} train={report.n_train} verify={report.n_verify} "
          f"verification_accuracy={e.accuracy:.4f} tp={e.tp} fp={e.fp} tn={e.tn} fn={e.fn}")


def _read_events(path):
    try:
        return ev.read_events_csv(path)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"malformed events CSV {path}: {exc}") from exc


def cmd_report(args, cfg: ToolConfig, outs: Outputs) -> None:
    events = _read_events(args.events)
    rates, kept, flagged, hist = _write_derived(events, cfg, outs, with_hist=True)
    modal = ",".join(f"{lo:g}-{hi:g}" for lo, hi in hist.modal_bins()) or "none"
    print(f"events={len(events)} rates={len(rates)} kept={len(kept)} flagged={len(flagged)} "
          f"modal_bins_bpm={modal}")


def cmd_compare(args, cfg: ToolConfig, outs: Outputs) -> None:
    events = _read_events(args.events)
    try:
        truth = ev.read_truth_json(args.truth)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_INPUT, f"malformed truth {args.truth}: {exc}") from exc
    cmp = ev.compare(events, truth, cfg.report.match_tolerance_s)
    ev.write_compare_csv(cmp, outs.path("compare.csv"))
    errs = cmp.start_errors()
    worst = f"{errs.max():.4f}" if errs.size else "nan"
    print(f"truth={len(truth)} detected={len(events)} hits={cmp.n_hits} recall={cmp.recall:.4f} "
          f"precision={cmp.precision:.4f} max_start_error_s={worst}")


# -- argument parsing ---------------------------------------------------------

def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=default, help="JSON config file")
    p.add_argument("--seed", type=int, default=default, help="seed for randomized steps")
    p.add_argument("--out", default=argparse.SUPPRESS if suppress else ".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scbabreath", description=__doc__.splitlines()[0])
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("template", help="build a breath template and LPC model from exemplars")
    p.add_argument("exemplar_dir")
    p.set_defaults(func=cmd_template)

    p = sub.add_parser("detect", help="detect inhalations in a recording")
    p.add_argument("audio")
    p.add_argument("--detector", choices=pipeline.DETECTOR_NAMES, default="lpc-svm")
    p.add_argument("--template")
    p.add_argument("--lpc")
    p.add_argument("--svm")
    p.add_argument("--threshold", type=float, help="pattern threshold")
    p.add_argument("--min-frames", type=int, help="pattern minimum run length")
    p.add_argument("--gain-threshold", type=float, help="LPC gain threshold")
    p.add_argument("--min-dur", type=float, help="LPC minimum event duration, seconds")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", help="render a scripted synthetic scene")
    p.add_argument("script")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-svm", help="train the gain-window classifier")
    p.add_argument("--gains", help=f"CSV with columns {','.join(GAIN_COLUMNS)}")
    p.add_argument("--audio", action="append")
    p.add_argument("--truth", action="append")
    p.add_argument("--lpc")
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser("report", help="rates, durations and rate histogram from events")
    p.add_argument("events")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare", help="match detected events against ground truth")
    p.add_argument("events")
    p.add_argument("truth")
    p.set_defaults(func=cmd_compare)

    for p in sub.choices.values():
        _add_globals(p, suppress=True)
    return parser


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, (UnsupportedFormat, CorruptHeader, EmptyAudio)):
        return EXIT_DECODE
    if isinstance(exc, ConfigMismatch):
        return EXIT_CONFIG
    if isinstance(exc, IllConditioned):
        return EXIT_NUMERIC
    return EXIT_INPUT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    outs = Outputs(args.out)
    try:
        try:
            cfg = load_config(args.config)
        except (OSError, ValueError, TypeError) as exc:
            raise CliError(EXIT_CONFIG, f"bad config {args.config}: {exc}") from exc
        args.func(args, cfg, outs)
    except (CliError, BreathError, OSError, ValueError) as exc:
        outs.discard()
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
