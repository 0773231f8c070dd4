import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scbabreath.errors import DimensionMismatch, TooShort, TooSmall
from scbabreath.lpc import GainSeries, LpcDetectConfig
from scbabreath.svm import (
    LabeledSet,
    SvmModel,
    classify,
    detect_events_svm,
    evaluate,
    gain_features,
    kernel,
    kernel_matrix,
    labeled_gain_set,
    load_svm,
    save_svm,
    select_gamma,
    split_train_verify,
    subsample,
    train,
)

XOR = LabeledSet(np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]), np.array([-1, -1, 1, 1]))


def clusters(n=200, seed=0, sep=2.0, spread=0.5):
    rng = np.random.default_rng(seed)
    half = n // 2
    x = np.concatenate([rng.normal(sep, spread, (half, 2)), rng.normal(-sep, spread, (n - half, 2))])
    y = np.concatenate([np.ones(half), -np.ones(n - half)])
    return LabeledSet(x, y)


def test_kernel_values():
    assert kernel([1, 0], [1, 0]) == pytest.approx(0.216)
    assert kernel([1, 0], [0, 1]) == 0
    assert kernel([1, 1], [1, 1]) == pytest.approx(1.728)
    with pytest.raises(DimensionMismatch):
        kernel([1, 0], [1, 0, 0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.floats(-4, 4))
def test_kernel_symmetry_and_homogeneity(u, v, c):
    u, v = np.array(u), np.array(v)
    assert kernel(u, v) == kernel(v, u)
    assert abs(kernel(c * u, v) - c ** 3 * kernel(u, v)) <= 1e-12 * max(1.0, abs(c ** 3 * kernel(u, v)))


def test_kernel_matrix_matches_scalar():
    a = np.random.default_rng(30).standard_normal((4, 3))
    k = kernel_matrix(a, a)
    assert np.allclose(k, [[kernel(p, q) for q in a] for p in a])


def test_split_is_stratified_and_seeded():
    data = clusters(100)
    tr, ve = split_train_verify(data, 0.7, seed=3)
    assert (len(tr), len(ve)) == (70, 30)
    tr2, _ = split_train_verify(data, 0.7, seed=3)
    assert np.array_equal(tr.features, tr2.features)
    tr3, _ = split_train_verify(data, 0.7, seed=4)
    assert not np.array_equal(tr.features, tr3.features)
    with pytest.raises(TooSmall):
        split_train_verify(LabeledSet(np.ones((5, 2)), np.ones(5)), 0.7, 0)
    tiny = clusters(10)
    _, ve = split_train_verify(tiny, 0.99, 0)
    assert set(ve.labels.tolist()) == {-1.0, 1.0}


def test_separable_training_accuracy():
    data = clusters(80, seed=5)
    m = train(data, 1e-2)
    assert evaluate(m, data).accuracy == 1.0
    deep = np.array([2.0, 2.0])
    assert classify(m, deep)[0] == 1


def test_xor_is_learned():
    m = train(XOR, 1e-3)
    assert evaluate(m, XOR).accuracy == 1.0


def test_heavy_regularization_falls_back_to_majority():
    x = np.random.default_rng(6).standard_normal((30, 2))
    y = np.where(np.arange(30) < 20, 1.0, -1.0)
    m = train(LabeledSet(x, y), 1e6)
    assert np.max(np.abs(m.decision_function(x) - m.bias)) < 1e-3
    assert np.all(m.predict(x) == 1)


def test_zero_feature_and_continuity():
    m = train(clusters(40, seed=7), 1e-2)
    label, value = classify(m, [0.0, 0.0])
    assert value == pytest.approx(m.bias)
    assert label == (1 if m.bias >= 0 else -1)
    f = np.array([0.3, -0.4])
    assert abs(classify(m, f + 1e-9)[1] - classify(m, f)[1]) < 1e-6


def test_verification_accuracy_and_complement():
    data = clusters(200, seed=8)
    tr, ve = split_train_verify(data, 0.7, 0)
    m, acc = select_gamma(tr, ve)
    assert acc >= 0.95
    flipped = LabeledSet(ve.features, -ve.labels)
    assert evaluate(m, flipped).accuracy == pytest.approx(1 - evaluate(m, ve).accuracy)
    e = evaluate(m, ve)
    assert e.tp + e.fp + e.tn + e.fn == len(ve)


def _gs(values):
    v = np.asarray(values, dtype=float)
    return GainSeries(v, np.arange(v.size) * 0.01, np.ones(v.size), 0.015)


def test_gain_features():
    g = _gs(np.exp(np.random.default_rng(9).standard_normal(50)))
    f1 = gain_features(g, 1)
    assert f1.shape == (50, 1)
    assert f1.mean() == pytest.approx(0, abs=1e-12) and f1.std() == pytest.approx(1)
    assert gain_features(g, 7).shape == (44, 7)
    const = gain_features(_gs(np.full(20, 0.3)), 5)
    assert np.all(const == const[0, 0])
    with pytest.raises(TooShort):
        gain_features(_gs([1.0, 2.0]), 3)


def test_labels_align_with_centre_frame():
    g = _gs(np.ones(30))
    data = labeled_gain_set(g, [(0.10, 0.20)], 5)
    # frames 10..19 have centres inside the interval; row t describes frame t + 2
    assert np.flatnonzero(data.labels == 1).tolist() == list(range(8, 18))


def test_subsample_keeps_both_classes():
    data = clusters(1000, seed=11)
    sub = subsample(data, 100, seed=0)
    assert len(sub) == 100
    assert set(sub.labels.tolist()) == {-1.0, 1.0}


def test_svm_detection_on_clean_track():
    # low gain marks breath frames; a 1-d threshold model is enough
    model = SvmModel(np.array([[1.0]]), np.array([-10.0]), 0.0, 1.0, feature_window=1,
                     standardization={"mean": 0.0, "std": 1.0}, feature_anchor=0)
    v = np.exp(np.array([1.0] * 20 + [-1.0] * 40 + [1.0] * 20))
    ev = detect_events_svm(_gs(v), model, LpcDetectConfig())
    assert len(ev) == 1
    assert ev[0].start_s == pytest.approx(0.2)


def test_model_file(tmp_path):
    m = train(clusters(30, seed=12), 1e-2)
    p = tmp_path / "svm.json"
    save_svm(m, p)
    back = load_svm(p)
    x = np.random.default_rng(13).standard_normal((5, 2))
    assert np.array_equal(back.decision_function(x), m.decision_function(x))
