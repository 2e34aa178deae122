"""Leave-one-run-out cross-validation, paired t-tests and report files."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .data import Dataset
from .errors import DataError
from .pipeline import (METHODS, TrainConfig, filtered_dataset, recognize, resolve_channels,
                       train, _window)

CSV_COLUMNS = ("method", "subject", "fold", "tw_s", "channels", "harmonics", "n_train", "accuracy")
THREADS_ENV = "SSVEPCCA_THREADS"

Condition = Tuple[float, str, int, int]


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Sweep:
    """Evaluation axes; every combination is one condition.

    ``n_train`` entries of ``None`` mean "all training runs".
    """

    tw_s: Tuple[float, ...] = (4.0,)
    channel_sets: Tuple[str, ...] = ("paper8",)
    harmonics: Tuple[int, ...] = (2,)
    n_train: Tuple[Optional[int], ...] = (None,)

    def __post_init__(self):
        for name in ("tw_s", "channel_sets", "harmonics", "n_train"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def cells(self):
        return itertools.product(self.channel_sets, self.tw_s, self.harmonics, self.n_train)

    @property
    def size(self) -> int:
        return len(self.tw_s) * len(self.channel_sets) * len(self.harmonics) * len(self.n_train)


@dataclass(frozen=True)
class FoldRecord:
    fold: int
    tw_s: float
    channels: str
    harmonics: int
    n_train: int
    accuracy: float

    @property
    def condition(self) -> Condition:
        return (self.tw_s, self.channels, self.harmonics, self.n_train)


@dataclass(frozen=True)
class CvReport:
    """Per-fold accuracies of one method on one subject across a sweep.

    ``timing`` (wall-clock seconds) is excluded from equality so that
    reports from identical inputs compare equal.
    """

    method: str
    subject: str
    sweep: Sweep
    records: Tuple[FoldRecord, ...]
    folds: int
    timing: Dict[str, float] = field(default_factory=dict, compare=False)

    def conditions(self) -> List[Condition]:
        seen: Dict[Condition, None] = {}
        for rec in self.records:
            seen.setdefault(rec.condition, None)
        return list(seen)

    def accuracies(self, condition: Condition) -> np.ndarray:
        return np.array([r.accuracy for r in self.records if r.condition == condition])

    def mean_accuracy(self, condition: Condition) -> float:
        acc = self.accuracies(condition)
        if acc.size == 0:
            raise KeyError(condition)
        return float(acc.mean())

    def summary(self) -> List[Dict[str, Any]]:
        """Mean and standard deviation over folds for each condition."""
        out = []
        for cond in self.conditions():
            acc = self.accuracies(cond)
            out.append({"tw_s": cond[0], "channels": cond[1], "harmonics": cond[2],
                        "n_train": cond[3], "mean": float(acc.mean()),
                        "std": float(acc.std(ddof=1)) if acc.size > 1 else 0.0})
        return out

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        d = {"method": self.method, "subject": self.subject, "folds": self.folds,
             "sweep": asdict(self.sweep),
             "records": [asdict(r) for r in self.records],
             "summary": self.summary()}
        if include_timing:
            d["timing"] = dict(self.timing)
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "CvReport":
        sweep = Sweep(**d["sweep"])
        records = tuple(FoldRecord(**r) for r in d["records"])
        return cls(d["method"], d["subject"], sweep, records, int(d["folds"]),
                   dict(d.get("timing", {})))


def _check_sweep(ds: Dataset, method: str, sweep: Sweep, base: TrainConfig) -> None:
    if method not in METHODS:
        raise DataError(f"unknown method {method!r}; choose from {METHODS}")
    if ds.runs < 2:
        raise DataError("leave-one-run-out needs at least 2 runs")
    fs = ds.sample_rate_hz
    for tw in sweep.tw_s:
        if int(math.floor(tw * fs + 1e-9)) > ds.n_samples:
            raise DataError(f"TW {tw} s exceeds the {ds.n_samples / fs} s trials")
    for spec in sweep.channel_sets:
        missing = [c for c in resolve_channels(spec) if c not in ds.channel_labels]
        if missing:
            raise DataError(f"channel set {spec!r} uses channels {missing} absent from the dataset")
    if method in ("cca", "mwaycca", "pcca"):
        for h in sweep.harmonics:
            if h * ds.stim_freqs_hz[-1] >= fs / 2:
                raise DataError(f"H={h} puts harmonics above Nyquist")
    if method == "pcca" and base.phase_channel not in ds.channel_labels:
        raise DataError(f"phase channel {base.phase_channel!r} absent from the dataset")
    if method != "cca":
        for n in sweep.n_train:
            if n is not None and not 2 <= n <= ds.runs - 1:
                raise DataError(f"n_train={n} outside [2, {ds.runs - 1}]")


def _run_fold(ds: Dataset, method: str, sweep: Sweep, base: TrainConfig, fold: int):
    test_runs = [fold]
    train_runs = [r for r in range(ds.runs) if r != fold]
    records = []
    train_s = 0.0
    n_trainings = 0
    recog_s = 0.0
    n_recog = 0
    cache: Dict[Tuple, Any] = {}
    for spec, tw, h, n_train in sweep.cells():
        cfg = replace(base, channels=resolve_channels(spec), tw_s=tw, harmonics=h,
                      n_train=None if method == "cca" else n_train)
        # MsetCCA does not use H, so its models are shared across that axis
        key = (spec, tw, None if method == "msetcca" else h, n_train)
        if key not in cache:
            cache[key] = train(ds, method, cfg, runs=train_runs, prefiltered=True)
            train_s += cache[key].train_seconds
            n_trainings += 1
        model = cache[key]
        correct = 0
        total = 0
        for m in range(len(ds.stim_freqs_hz)):
            for r in test_runs:
                x = _window(ds.trial(m, r), cfg, cfg.channels).unlabeled()
                t0 = time.perf_counter()
                res = recognize(model, x)
                recog_s += time.perf_counter() - t0
                n_recog += 1
                correct += int(res.decided_index == m)
                total += 1
        used = 0 if method == "cca" else len(model.payload["training_runs"])
        records.append(FoldRecord(fold, float(tw), spec, int(h), used, correct / total))
    return records, train_s, n_trainings, recog_s, n_recog


def loro_cv(ds: Dataset, method: str, sweep: Sweep = Sweep(),
            base: TrainConfig = TrainConfig(), subject: str = "",
            n_jobs: Optional[int] = None) -> CvReport:
    """Leave-one-run-out cross-validation over every sweep condition.

    Fold r trains on all other runs (or the first ``n_train`` of them) and
    tests on the trials of run r. The ``cca`` method trains nothing, so its
    folds simply partition the runs.
    """
    _check_sweep(ds, method, sweep, base)
    fds = filtered_dataset(ds, base.bandpass)
    jobs = default_jobs() if n_jobs is None else max(1, int(n_jobs))
    folds = range(ds.runs)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda r: _run_fold(fds, method, sweep, base, r), folds))
    else:
        results = [_run_fold(fds, method, sweep, base, r) for r in folds]
    records = tuple(rec for res in results for rec in res[0])
    n_train_models = sum(res[2] for res in results)
    n_recog = sum(res[4] for res in results)
    timing = {
        "train_s_per_model": sum(res[1] for res in results) / max(n_train_models, 1),
        "recognize_s_per_trial": sum(res[3] for res in results) / max(n_recog, 1),
    }
    return CvReport(method, str(subject), sweep, records, ds.runs, timing)


# -- statistics ------------------------------------------------------------

def paired_ttest(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    """Paired-sample t statistic of ``a - b`` and its two-sided p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"paired samples must be equal-length vectors, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise DataError("paired t-test needs n >= 2")
    d = a - b
    sd = d.std(ddof=1)
    mean = d.mean()
    if sd == 0:
        if mean == 0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = float(mean / (sd / math.sqrt(n)))
    p = float(2 * stats.t.sf(abs(t), df=n - 1))
    return t, min(p, 1.0)


@dataclass(frozen=True)
class Comparison:
    """Paired t-test between two methods' subject means at one condition."""

    tw_s: float
    channels: str
    harmonics: int
    n_train: int
    method_a: str
    method_b: str
    mean_a: float
    mean_b: float
    n_subjects: int
    t: float
    p: float


def _partner_condition(cond: Condition, method: str) -> Condition:
    # cca trains nothing, so its records carry n_train=0 for every condition
    return (cond[0], cond[1], cond[2], 0) if method == "cca" else cond


def compare_methods(reports: Sequence[CvReport]) -> List[Comparison]:
    """Pairwise t-tests between methods, pairing subjects, for each shared condition."""
    by_method: Dict[str, Dict[str, CvReport]] = {}
    for rep in reports:
        by_method.setdefault(rep.method, {})[rep.subject] = rep
    methods = sorted(by_method, key=lambda m: METHODS.index(m) if m in METHODS else len(METHODS))
    out = []
    for ma, mb in itertools.combinations(methods, 2):
        subjects = sorted(set(by_method[ma]) & set(by_method[mb]))
        if len(subjects) < 2:
            continue
        # iterate the trained side's conditions so n_train stays informative
        lead = mb if ma == "cca" else ma
        for cond in by_method[lead][subjects[0]].conditions():
            ca, cb = _partner_condition(cond, ma), _partner_condition(cond, mb)
            try:
                a = [by_method[ma][s].mean_accuracy(ca) for s in subjects]
                b = [by_method[mb][s].mean_accuracy(cb) for s in subjects]
            except KeyError:
                continue
            t, p = paired_ttest(a, b)
            out.append(Comparison(cond[0], cond[1], cond[2], cond[3], ma, mb,
                                  float(np.mean(a)), float(np.mean(b)), len(subjects), t, p))
    return out


# -- report files ----------------------------------------------------------

def _as_list(reports) -> List[CvReport]:
    return [reports] if isinstance(reports, CvReport) else list(reports)


def report_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in _as_list(reports):
        for rec in rep.records:
            writer.writerow([rep.method, rep.subject, rec.fold, repr(rec.tw_s), rec.channels,
                             rec.harmonics, rec.n_train, repr(rec.accuracy)])
    return buf.getvalue()


def report_json(reports, include_timing: bool = True) -> str:
    reps = _as_list(reports)
    doc: Dict[str, Any] = {"reports": [r.to_dict(include_timing) for r in reps]}
    if len({r.method for r in reps}) >= 2:
        doc["ttests"] = [asdict(c) for c in compare_methods(reps)]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit_report(reports: Union[CvReport, Sequence[CvReport]], path, fmt: str = "csv",
                include_timing: bool = True) -> Path:
    """Write reports as plot-ready CSV (one row per fold and condition) or JSON.

    JSON mirrors each report in full and, when two or more methods are
    present, adds a ``ttests`` block with one entry per condition and
    method pair.
    """
    if fmt not in ("csv", "json"):
        raise DataError(f"unknown report format {fmt!r}")
    text = report_csv(reports) if fmt == "csv" else report_json(reports, include_timing)
    out = Path(path)
    out.write_text(text, encoding="utf-8")
    return out


def read_report_json(path) -> List[CvReport]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [CvReport.from_dict(d) for d in doc["reports"]]


def read_report_csv(path) -> List[CvReport]:
    """Rebuild reports from CSV rows (sweep axes inferred, timing lost)."""
    rows: Dict[Tuple[str, str], List[Dict[str, str]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault((row["method"], row["subject"]), []).append(row)
    out = []
    for (method, subject), rs in rows.items():
        recs = tuple(FoldRecord(int(r["fold"]), float(r["tw_s"]), r["channels"],
                                int(r["harmonics"]), int(r["n_train"]), float(r["accuracy"]))
                     for r in rs)
        sweep = Sweep(tuple(dict.fromkeys(r.tw_s for r in recs)),
                      tuple(dict.fromkeys(r.channels for r in recs)),
                      tuple(dict.fromkeys(r.harmonics for r in recs)),
                      tuple(dict.fromkeys(r.n_train for r in recs)))
        out.append(CvReport(method, subject, sweep, recs, len({r.fold for r in recs})))
    return out
