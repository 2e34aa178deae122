import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssvepcca.data import Dataset, Epoch
from ssvepcca.errors import DataError, ShapeMismatchError
from ssvepcca.evaluation import (CSV_COLUMNS, CvReport, Sweep, compare_methods, emit_report,
                                 loro_cv, paired_ttest, read_report_csv, read_report_json,
                                 report_json)
from ssvepcca.pipeline import (TrainConfig, TrainedModel, load_model, preprocess, recognize,
                               recognize_raw, save_model, train)
from ssvepcca.references import sincos_refs
from ssvepcca.simgen import CHANNEL_SETS, GeneratorConfig, generate

from oracles import ttest_oracle

P4 = TrainConfig(channels="paper4", tw_s=1.0)


def test_cca_consumes_no_training(small_dataset):
    model = train(small_dataset, "cca", P4)
    assert all(r.method == "sincos" and r.n_rows == 4 for r in model.refs)
    assert "training_runs" not in model.payload


def test_trainable_methods_need_two_trials(small_dataset):
    for method in ("msetcca", "mwaycca", "pcca"):
        with pytest.raises(DataError, match="at least 2"):
            train(small_dataset, method, P4, runs=[0])


@pytest.mark.slow
def test_msetcca_on_nineteen_runs():
    ds = generate(GeneratorConfig(runs=20, trial_seconds=1.0, seed=8))
    model = train(ds, "msetcca", P4, runs=range(19))
    assert all(r.signals.shape == (19, 250) for r in model.refs)


@pytest.mark.parametrize("method", ["cca", "msetcca", "mwaycca", "pcca"])
def test_noiseless_nine_hz(method):
    ds = generate(GeneratorConfig(snr_db=40.0, runs=4, seed=1))
    model = train(ds, method, TrainConfig(tw_s=2.0), runs=[0, 1, 2])
    res = recognize_raw(model, ds.trial(2, 3))
    assert res.decided_freq_hz == 9.0
    assert all(0.0 <= s <= 1.0 for s in res.scores)


def test_white_noise_still_decides(small_dataset):
    model = train(small_dataset, "cca", TrainConfig(tw_s=2.0))
    x = np.random.default_rng(77).standard_normal((8, 500))
    res = recognize_raw(model, Epoch(x, CHANNEL_SETS["paper8"], 250.0))
    assert res.decided_index in range(4)
    assert max(res.scores) < 0.5


def test_ties_go_to_lowest_frequency(small_dataset):
    base = train(small_dataset, "cca", P4)
    same = sincos_refs(8.0, 2, 250, 250.0).signals
    refs = tuple(type(r)(r.stim_freq_hz, same, "sincos") for r in base.refs)
    model = TrainedModel("cca", base.stim_freqs_hz, 250.0, P4, refs)
    res = recognize_raw(model, small_dataset.trial(3, 0))
    assert len(set(res.scores)) == 1
    assert res.decided_index == 0 and res.decided_freq_hz == 6.0


def test_shape_mismatch(small_dataset):
    model = train(small_dataset, "cca", P4)
    x = preprocess(small_dataset.trial(0, 0), TrainConfig(channels="paper8", tw_s=1.0))
    with pytest.raises(ShapeMismatchError, match="shape mismatch"):
        recognize(model, x)
    short = Epoch(np.ones((2, 500)) + np.arange(500), ["O1", "O2"], 250.0)
    with pytest.raises(ShapeMismatchError, match="shape mismatch"):
        recognize_raw(model, short)


@settings(max_examples=15, deadline=None)
@given(scales=st.lists(st.floats(0.01, 100.0), min_size=4, max_size=4))
def test_argmax_invariant_to_channel_scaling(small_dataset, scales):
    model = train(small_dataset, "cca", P4)
    x = preprocess(small_dataset.trial(1, 2), P4).unlabeled()
    y = x.with_samples(x.samples * np.asarray(scales)[:, None])
    assert recognize(model, y).decided_index == recognize(model, x).decided_index


@pytest.mark.parametrize("method", ["cca", "msetcca", "mwaycca", "pcca"])
def test_model_roundtrip(tmp_path, small_dataset, method):
    model = train(small_dataset, method, P4, runs=[0, 1, 2, 3])
    back = load_model(save_model(model, tmp_path / method))
    assert back.method == method and back.config == model.config
    x = preprocess(small_dataset.trial(2, 5), P4).unlabeled()
    a, b = recognize(model, x), recognize(back, x)
    assert a.decided_index == b.decided_index
    np.testing.assert_allclose(a.scores, b.scores, atol=1e-5)
    doc = json.loads((tmp_path / method / "model.json").read_text())
    if method == "msetcca":
        assert len(doc["eigenvalues"]) == 4
        assert (tmp_path / method / "filters_f0.f32").stat().st_size == 4 * 4 * 4
    if method == "pcca":
        assert "latency_s" in doc["latency"]


def test_loro_fold_layout(small_dataset):
    rep = loro_cv(small_dataset, "msetcca", Sweep(tw_s=(1.0, 2.0), channel_sets=("paper4",)))
    assert rep.folds == 6
    assert len(rep.records) == 12
    assert {r.n_train for r in rep.records} == {5}
    for r in rep.records:
        assert r.accuracy * 4 == pytest.approx(round(r.accuracy * 4))


def test_loro_n_train_axis(small_dataset):
    rep = loro_cv(small_dataset, "msetcca", Sweep(tw_s=(1.0,), n_train=(2, 3, None)))
    assert {r.n_train for r in rep.records} == {2, 3, 5}
    with pytest.raises(DataError, match="n_train"):
        loro_cv(small_dataset, "msetcca", Sweep(tw_s=(1.0,), n_train=(6,)))
    with pytest.raises(DataError, match="TW"):
        loro_cv(small_dataset, "cca", Sweep(tw_s=(3.0,)))
    with pytest.raises(DataError, match="absent"):
        loro_cv(small_dataset, "cca", Sweep(tw_s=(1.0,), channel_sets=("paper30",)))


def test_cca_fold_independence(small_dataset):
    rep = loro_cv(small_dataset, "cca", Sweep(tw_s=(1.0,), channel_sets=("paper4",)))
    order = [3, 0, 5, 1, 4, 2]
    trials = {(m, i): small_dataset.trial(m, r) for m in range(4) for i, r in enumerate(order)}
    shuffled = Dataset(small_dataset.stim_freqs_hz, 6, trials)
    rep2 = loro_cv(shuffled, "cca", Sweep(tw_s=(1.0,), channel_sets=("paper4",)))
    assert sorted(r.accuracy for r in rep.records) == sorted(r.accuracy for r in rep2.records)


def test_determinism_and_threads(small_dataset, tmp_path):
    sweep = Sweep(tw_s=(1.0,), channel_sets=("paper4",))
    a = loro_cv(small_dataset, "pcca", sweep, n_jobs=1)
    b = loro_cv(small_dataset, "pcca", sweep, n_jobs=3)
    assert a == b
    emit_report(a, tmp_path / "a.json", "json", include_timing=False)
    emit_report(b, tmp_path / "b.json", "json", include_timing=False)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_paired_ttest_examples():
    assert paired_ttest([0.5, 0.7, 0.9], [0.5, 0.7, 0.9]) == (0.0, 1.0)
    t, p = paired_ttest([1, 2, 3, 4, 5], [0, 0, 0, 0, 0])
    assert t == pytest.approx(3 / math.sqrt(0.5), abs=1e-12)
    assert p == pytest.approx(0.0132, abs=1e-3)
    with pytest.raises(DataError):
        paired_ttest([1, 2], [1, 2, 3])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 15))
def test_paired_ttest_against_quadrature(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.5, 1.0, n)
    b = np.clip(a - 0.03 + 0.05 * rng.standard_normal(n), 0, 1)
    t, p = paired_ttest(a, b)
    t0, p0 = ttest_oracle(a, b)
    assert t == pytest.approx(t0, rel=1e-10)
    assert p == pytest.approx(p0, abs=1e-6)


def test_report_formats(small_dataset, tmp_path):
    sweep = Sweep(tw_s=(1.0,), channel_sets=("paper4",))
    reps = [loro_cv(small_dataset, m, sweep, subject=s)
            for m in ("cca", "msetcca") for s in ("s1", "s2")]
    emit_report(reps, tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 1 + 4 * 6
    back = read_report_csv(tmp_path / "r.csv")
    assert [r.records for r in back] == [r.records for r in reps]
    doc = json.loads(report_json(reps))
    assert len(doc["ttests"]) == 1
    assert doc["ttests"][0]["method_a"] == "cca" and doc["ttests"][0]["n_subjects"] == 2
    emit_report(reps, tmp_path / "r.json", "json")
    assert read_report_json(tmp_path / "r.json") == reps
    assert len(compare_methods(reps)) == 1


def test_empty_sweep_gives_header_only(small_dataset, tmp_path):
    rep = loro_cv(small_dataset, "cca", Sweep(tw_s=()))
    emit_report(rep, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CSV_COLUMNS) + "\n"
    with pytest.raises(DataError):
        emit_report(rep, tmp_path / "e.txt", "txt")


def test_cv_report_summary(small_dataset):
    rep = loro_cv(small_dataset, "cca", Sweep(tw_s=(1.0,)))
    (row,) = rep.summary()
    assert 0.0 <= row["mean"] <= 1.0 and row["std"] >= 0.0
    assert set(rep.timing) == {"train_s_per_model", "recognize_s_per_trial"}
    assert CvReport.from_dict(rep.to_dict()) == rep
    with pytest.raises(KeyError):
        rep.mean_accuracy((9.0, "paper4", 2, 0))
