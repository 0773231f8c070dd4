"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary (see conftest.py) and, when this
file is run as a script, on stdout.
"""
import filecmp
import json
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import solve_toeplitz, toeplitz
from scipy.signal import lfilter, welch

from conftest import ACCEPTANCE, field_duration_rows, field_rate_rows, rows_with_predecessor
from scbabreath import lpc, pipeline, svm, synth, template
from scbabreath.cepstral import hz_to_mel, periodogram
from scbabreath.cli import main
from scbabreath.config import ToolConfig
from scbabreath.events import (
    BreathEvent,
    RateSeries,
    breathing_rates,
    compare,
    durations,
    histogram,
    screen_outliers,
)
from scbabreath.pattern import detect_events_pattern


def record(n, ok, detail):
    ACCEPTANCE[n] = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    return ok


# ---- 1: logged breathing rates ---------------------------------------------

def test_criterion_1_logged_rates():
    t0 = time.perf_counter()
    rows = rows_with_predecessor(field_rate_rows())
    worst, n_bad = 0.0, 0
    for prev, t, printed in rows:
        got = breathing_rates([prev, t]).rate_bpm[0]
        err = abs(got - printed)
        worst = max(worst, err)
        n_bad += err > 0.05
    elapsed = time.perf_counter() - t0
    ok = n_bad == 0 and len(rows) == 48 and elapsed < 1.0
    record(1, ok, f"rows={len(rows)} outside_0.05bpm={n_bad} max_abs_err={worst:.3f}bpm runtime={elapsed:.3f}s")
    assert ok


# ---- 2: logged durations ---------------------------------------------------

def test_criterion_2_logged_durations():
    rows = field_duration_rows()
    events = [BreathEvent.span(float(t), float(t) + float(d), 1.0, "lpc_svm") for t, d in rows]
    got = [f"{x:.2f}" for x in durations(events)]
    mismatched = sum(g != d for g, (_, d) in zip(got, rows))
    ok = mismatched == 0
    record(2, ok, f"rows={len(rows)} mismatched={mismatched}")
    assert ok


# ---- 3: mel anchor ----------------------------------------------------------

def test_criterion_3_mel_anchor():
    m = float(hz_to_mel(1000.0))
    ok = 996.0 <= m <= 1000.5
    record(3, ok, f"hz_to_mel(1000)={m:.3f}")
    assert ok


# ---- 4: oracle equivalence --------------------------------------------------

def direct_periodogram(x, n_fft):
    n = np.arange(x.size)
    out = np.empty(n_fft // 2 + 1)
    for k in range(out.size):
        out[k] = abs(np.sum(x * np.exp(-2j * np.pi * k * n / n_fft))) ** 2
    return out / x.size


def test_criterion_4_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(40)
    spec_err = 0.0
    for _ in range(100):
        flen = int(rng.integers(64, 401))
        x = rng.standard_normal(flen)
        ref = direct_periodogram(x, 512)
        spec_err = max(spec_err, np.max(np.abs(periodogram(x, 512) - ref)) / np.max(ref))
    lev_err = 0.0
    for _ in range(10_000):
        p = int(rng.integers(1, 13))
        r = lpc.autocorrelation(rng.standard_normal(int(rng.integers(2 * p + 2, 128))), p)
        a = lpc.solve_lpc(r, p).coeffs
        ref = np.linalg.solve(toeplitz(r[:p]), r[1 : p + 1])
        lev_err = max(lev_err, np.linalg.norm(a - ref) / np.linalg.norm(ref))
    elapsed = time.perf_counter() - t0
    ok = spec_err <= 1e-9 and lev_err <= 1e-8 and elapsed < 30
    record(4, ok, f"periodogram_rel={spec_err:.1e} levinson_rel={lev_err:.1e} runtime={elapsed:.1f}s")
    assert ok


# ---- 5: LPC identification ---------------------------------------------------

def ar10_coefficients():
    # five resonances at radius 0.95, angles 0.3 .. 2.7 rad; every |a_k| >= 0.2
    theta = 0.3 + 0.6 * np.arange(5)
    poles = 0.95 * np.exp(1j * np.concatenate([theta, -theta]))
    return -np.real(np.poly(poles))[1:]


def spectral_flatness(x):
    _, p = welch(x, nperseg=1024)
    p = p[1:-1]
    return float(np.exp(np.mean(np.log(p))) / np.mean(p))


def test_criterion_5_lpc_identification():
    a = ar10_coefficients()
    x = lfilter([1.0], np.concatenate([[1.0], -a]), np.random.default_rng(5).standard_normal(100_000))
    model = lpc.solve_lpc(lpc.autocorrelation(x, 10), 10)
    rel = np.max(np.abs(model.coeffs - a) / np.abs(a))
    flat = spectral_flatness(lpc.inverse_filter(x, model))
    ok = rel <= 0.05 and flat >= 0.8
    record(5, ok, f"max_coeff_rel_err={rel:.4f} residual_flatness={flat:.3f}")
    assert ok


# ---- 6: SVM properties ------------------------------------------------------

XOR = svm.LabeledSet(np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]), np.array([-1.0, -1.0, 1.0, 1.0]))


def two_clusters(n=200, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    x = np.concatenate([rng.normal(2.0, 0.5, (half, 2)), rng.normal(-2.0, 0.5, (n - half, 2))])
    return svm.LabeledSet(x, np.concatenate([np.ones(half), -np.ones(n - half)]))


def test_criterion_6_svm_properties():
    rng = np.random.default_rng(60)
    sym, hom = 0.0, 0.0
    for _ in range(1000):
        u, v = rng.uniform(-3, 3, (2, 4))
        c = rng.uniform(-4, 4)
        k = svm.kernel(u, v)
        sym = max(sym, abs(k - svm.kernel(v, u)))
        hom = max(hom, abs(svm.kernel(c * u, v) - c ** 3 * k) / max(1.0, abs(c ** 3 * k)))
    xor_acc = svm.evaluate(svm.train(XOR, 1e-3), XOR).accuracy
    tr, ve = svm.split_train_verify(two_clusters(), 0.7, seed=0)
    _, ver_acc = svm.select_gamma(tr, ve)
    ok = sym <= 1e-12 and hom <= 1e-12 and xor_acc == 1.0 and ver_acc >= 0.95
    record(6, ok, f"symmetry={sym:.1e} homogeneity={hom:.1e} xor_acc={xor_acc:.2f} "
                  f"verify_acc={ver_acc:.3f} (n={len(tr)}+{len(ve)})")
    assert ok


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_criterion_6_kernel_symmetry_property(u, v):
    assert svm.kernel(u, v) == svm.kernel(v, u)


# ---- 7 and 8 share the synthetic scene ---------------------------------------

@pytest.fixture(scope="module")
def scene_setup():
    t0 = time.perf_counter()
    cfg = ToolConfig()
    ex = synth.exemplar_set()
    model = lpc.fit_lpc(ex, cfg.lpc.order, cfg.frontend)
    tmpl = template.build_template(ex, cfg.frontend, cfg.mel, cfg.pattern.target_subframes)
    train = synth.render_scene(synth.breathing_scene(seed=7))
    report = pipeline.train_gain_classifier([(train.buffer, train.truth.inhales)], model, cfg)
    scene = synth.render_scene(synth.breathing_scene(seed=1))
    return dict(cfg=cfg, model=model, template=tmpl, classifier=report.model, scene=scene,
                setup_s=time.perf_counter() - t0)


def test_criterion_7_end_to_end(scene_setup):
    s = scene_setup
    t0 = time.perf_counter()
    cfg, scene = s["cfg"], s["scene"]
    truth = scene.truth.inhales
    det = pipeline.detect_lpc_svm(scene.buffer, s["model"], s["classifier"], cfg)
    c = compare(det.events, truth, cfg.report.match_tolerance_s)
    errs = np.abs(c.start_errors())
    pat = pipeline.detect_pattern(scene.buffer, s["template"], cfg)
    pc = compare(pat.events, truth, cfg.report.match_tolerance_s)
    elapsed = s["setup_s"] + time.perf_counter() - t0
    max_err = float(errs.max()) if errs.size else float("inf")
    ok = (len(truth) == 40 and c.recall >= 0.9 and c.precision >= 0.9 and max_err <= 0.15
          and cfg.pattern.threshold == 0.25 and cfg.pattern.normalize and pc.recall >= 0.8 and elapsed < 60)
    record(7, ok, f"inhales={len(truth)} lpc_svm recall={c.recall:.3f} precision={c.precision:.3f} "
                  f"start_err max={max_err:.3f}s mean={errs.mean():.3f}s pattern recall={pc.recall:.3f} "
                  f"runtime={elapsed:.1f}s")
    assert ok


# ---- 8: monotonicity ----------------------------------------------------------

def non_increasing(counts):
    return all(b <= a for a, b in zip(counts, counts[1:]))


def test_criterion_8_monotonicity(scene_setup):
    s = scene_setup
    cfg, buf = s["cfg"], s["scene"].buffer
    index = pipeline.detect_pattern(buf, s["template"], cfg).index
    gains = pipeline.lpc_gains(buf, s["model"], cfg)
    base = pipeline.lpc_detect_config(cfg)

    def lpc_count(**kw):
        return len(lpc.detect_events_lpc(gains, base.__class__(**{**base.__dict__, **kw})))

    def svm_count(**kw):
        return len(svm.detect_events_svm(gains, s["classifier"], base.__class__(**{**base.__dict__, **kw})))

    sweeps = {
        "pattern_threshold": [len(detect_events_pattern(index, t, cfg.pattern.min_frames))
                              for t in (0.15, 0.25, 0.35, 0.45, 0.55)],
        "pattern_min_frames": [len(detect_events_pattern(index, cfg.pattern.threshold, k))
                               for k in (5, 10, 15, 20, 25)],
        # frames pass when gain <= threshold, so strictness rises as the threshold falls
        "lpc_gain_threshold": [lpc_count(gain_threshold=t) for t in (1.2, 1.0, 0.8, 0.6, 0.4)],
        "lpc_min_dur": [lpc_count(min_dur_s=d) for d in (0.1, 0.2, 0.3, 0.4, 0.5)],
        "lpc_svm_min_dur": [svm_count(min_dur_s=d) for d in (0.1, 0.2, 0.3, 0.4, 0.5)],
    }
    sweep_ok = {k: non_increasing(v) for k, v in sweeps.items()}

    rng = np.random.default_rng(80)
    conserve_ok, lossless_ok = True, True
    for _ in range(200):
        vals = rng.uniform(-50, 150, int(rng.integers(0, 80)))
        conserve_ok &= int(histogram(vals, float(rng.uniform(0.5, 20)), (0, 100)).counts.sum()) == vals.size
        r = RateSeries(np.arange(vals.size, dtype=float), vals)
        kept, flagged = screen_outliers(r, 4.0, 60.0)
        merged = np.sort(np.concatenate([kept.event_time_s, flagged.event_time_s]))
        lossless_ok &= len(kept) + len(flagged) == len(r) and np.array_equal(merged, r.event_time_s)

    ok = all(sweep_ok.values()) and conserve_ok and lossless_ok
    detail = " ".join(f"{k}={v}{'' if sweep_ok[k] else '(non-monotone)'}" for k, v in sweeps.items())
    record(8, ok, f"{detail} hist_conserve={conserve_ok} screen_lossless={lossless_ok}")
    assert ok


# ---- 9: CLI determinism ---------------------------------------------------------

def cli_session(root, inputs):
    """Run every command once, writing under ``root``; returns the exit codes."""
    ex, scene_script, train_script = inputs
    m = root / "models"
    steps = [
        ["template", ex, "--out", m],
        ["synth", scene_script, "--out", root / "scene"],
        ["synth", train_script, "--out", root / "train"],
        ["train-svm", "--audio", root / "train/scene.wav", "--truth", root / "train/scene.truth.json",
         "--lpc", m / "lpc.json", "--out", m],
        ["detect", root / "scene/scene.wav", "--detector", "pattern", "--template", m / "template.json",
         "--out", root / "pattern"],
        ["detect", root / "scene/scene.wav", "--detector", "lpc", "--lpc", m / "lpc.json", "--out", root / "lpc"],
        ["detect", root / "scene/scene.wav", "--detector", "lpc-svm", "--lpc", m / "lpc.json",
         "--svm", m / "svm.json", "--out", root / "lpcsvm"],
        ["report", root / "lpcsvm/events.csv", "--out", root / "report"],
        ["compare", root / "lpcsvm/events.csv", root / "scene/scene.truth.json", "--out", root / "compare"],
    ]
    return [main(["--seed", "11"] + [str(a) for a in step]) for step in steps]


def test_criterion_9_cli_determinism(tmp_path):
    from scbabreath.audio import save_wav

    ex = tmp_path / "exemplars"
    ex.mkdir()
    for i, b in enumerate(synth.exemplar_set(n=8)):
        save_wav(b, ex / f"ex{i:02d}.wav")
    scene_script = tmp_path / "scene.json"
    scene_script.write_text(json.dumps(synth.breathing_scene(duration_s=30.0, n_inhales=10, seed=2).to_dict()))
    train_script = tmp_path / "train.json"
    train_script.write_text(json.dumps(synth.breathing_scene(duration_s=60.0, n_inhales=20, seed=7).to_dict()))
    inputs = (ex, scene_script, train_script)
    codes_a = cli_session(tmp_path / "a", inputs)
    codes_b = cli_session(tmp_path / "b", inputs)
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    differing = [str(p) for p in files_a
                 if not filecmp.cmp(tmp_path / "a" / p, tmp_path / "b" / p, shallow=False)]
    ok = codes_a == codes_b == [0] * len(codes_a) and files_a == files_b and not differing
    record(9, ok, f"commands={len(codes_a)} files={len(files_a)} differing={differing or 0}")
    assert ok


if __name__ == "__main__":
    import sys

    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
