"""Training and recognition for the four reference-signal methods.

All methods recognize a test epoch the same way: CCA between the epoch
and each frequency's reference block, then argmax over frequencies.
They differ only in how the references are built:

``cca``      sine-cosine waves, no training data
``msetcca``  joint spatial filtering of same-frequency training trials
``mwaycca``  alternating CCA between a trial tensor and sine-cosine waves
``pcca``     sine-cosine waves shifted by a latency-derived phase
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import pcca as pcca_mod
from .cca import max_cca
from .data import Dataset, Epoch, TrialSet, read_f32, slice_epoch, write_f32
from .dsp import BandpassSpec, bandpass, standardize
from .errors import DataError, ShapeMismatchError
from .msetcca import SpatialFilterBank, fit_msetcca
from .mwaycca import TrialTensor, fit_mwaycca
from .references import ReferenceSet, sincos_refs
from .simgen import CHANNEL_SETS

METHODS = ("cca", "msetcca", "mwaycca", "pcca")
TRAINABLE = ("msetcca", "mwaycca", "pcca")
MODEL_FILE = "model.json"


def resolve_channels(spec) -> Tuple[str, ...]:
    """Channel-set alias (``paper4`` ...) or explicit label list."""
    if isinstance(spec, str):
        if spec in CHANNEL_SETS:
            return CHANNEL_SETS[spec]
        return tuple(c.strip() for c in spec.split(",") if c.strip())
    return tuple(spec)


@dataclass(frozen=True)
class TrainConfig:
    """Preprocessing and method parameters shared by training and recognition.

    ``n_train`` limits training to the first ``n_train`` runs (per
    frequency) in run order; ``None`` uses every training run.
    ``bandpass`` is applied to whole trials before time-window slicing.
    """

    channels: Tuple[str, ...] = CHANNEL_SETS["paper8"]
    tw_s: float = 4.0
    harmonics: int = 2
    n_train: Optional[int] = None
    bandpass: Optional[BandpassSpec] = BandpassSpec()
    phase_channel: str = "Oz"
    pcca_sine_only: bool = False
    normalize_variates: bool = True
    mway_tol: float = 1e-6
    mway_max_iter: int = 200

    def __post_init__(self):
        object.__setattr__(self, "channels", resolve_channels(self.channels))
        if not self.channels:
            raise DataError("channel set is empty")
        if self.harmonics < 1:
            raise DataError(f"harmonics must be >= 1, got {self.harmonics}")
        if self.n_train is not None and self.n_train < 1:
            raise DataError(f"n_train must be positive, got {self.n_train}")

    def n_samples(self, fs: float) -> int:
        return int(np.floor(self.tw_s * fs + 1e-9))

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["channels"] = list(self.channels)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TrainConfig":
        d = dict(d)
        if d.get("bandpass") is not None:
            d["bandpass"] = BandpassSpec(**d["bandpass"])
        d["channels"] = tuple(d["channels"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    method: str
    stim_freqs_hz: Tuple[float, ...]
    sample_rate_hz: float
    config: TrainConfig
    refs: Tuple[ReferenceSet, ...]
    payload: Mapping[str, Any] = field(default_factory=dict)
    train_seconds: float = 0.0

    def __post_init__(self):
        if len(self.refs) != len(self.stim_freqs_hz):
            raise DataError("one reference set per candidate frequency required")
        if len({r.n_samples for r in self.refs}) != 1:
            raise ShapeMismatchError("shape mismatch: reference sets differ in length")

    @property
    def n_samples(self) -> int:
        return self.refs[0].n_samples


@dataclass(frozen=True)
class RecognitionResult:
    scores: Tuple[float, ...]
    decided_index: int
    decided_freq_hz: float


def preprocess(e: Epoch, cfg: TrainConfig, channels: Optional[Sequence[str]] = None) -> Epoch:
    """Band-pass (optional), slice to channels and window, standardize."""
    if cfg.bandpass is not None:
        e = bandpass(e, cfg.bandpass)
    return standardize(slice_epoch(e, cfg.channels if channels is None else channels, cfg.tw_s))


def filtered_dataset(ds: Dataset, spec: Optional[BandpassSpec]) -> Dataset:
    """Band-pass every trial once so sweeps can reuse the result."""
    if spec is None:
        return ds
    trials = {k: bandpass(e, spec) for k, e in ds.trials.items()}
    return Dataset(ds.stim_freqs_hz, ds.runs, trials, ds.manifest)


def _window(e: Epoch, cfg: TrainConfig, channels: Sequence[str]) -> Epoch:
    return standardize(slice_epoch(e, channels, cfg.tw_s))


def training_runs(runs: Iterable[int], n_train: Optional[int]) -> List[int]:
    runs = sorted(runs)
    if n_train is not None:
        if n_train > len(runs):
            raise DataError(f"n_train={n_train} exceeds the {len(runs)} available training runs")
        runs = runs[:n_train]
    return runs


def train(ds: Dataset, method: str, cfg: TrainConfig, runs: Optional[Iterable[int]] = None,
          prefiltered: bool = False) -> TrainedModel:
    """Build one reference set per stimulus frequency.

    Parameters
    ----------
    ds : Dataset
    method : {"cca", "msetcca", "mwaycca", "pcca"}
    cfg : TrainConfig
    runs : iterable of int, optional
        Runs available for training; defaults to all runs.
    prefiltered : bool
        Set when ``ds`` already went through ``cfg.bandpass``.
    """
    if method not in METHODS:
        raise DataError(f"unknown method {method!r}; choose from {METHODS}")
    t0 = time.perf_counter()
    fs = ds.sample_rate_hz
    n_pts = cfg.n_samples(fs)
    freqs = ds.stim_freqs_hz
    payload: Dict[str, Any] = {}

    if method == "cca":
        refs = tuple(sincos_refs(f, cfg.harmonics, n_pts, fs) for f in freqs)
        return TrainedModel(method, freqs, fs, cfg, refs, payload, time.perf_counter() - t0)

    use = training_runs(range(ds.runs) if runs is None else runs, cfg.n_train)
    if len(use) < 2:
        raise DataError(f"{method} needs at least 2 training trials per frequency, got {len(use)}")
    src = ds if prefiltered else filtered_dataset(ds, cfg.bandpass)

    def trial_set(m, channels):
        return TrialSet(freqs[m], tuple(_window(src.trial(m, r), cfg, channels) for r in use))

    if method == "msetcca":
        banks, refs = [], []
        for m in range(len(freqs)):
            bank, ref = fit_msetcca(trial_set(m, cfg.channels),
                                    normalize_variates=cfg.normalize_variates)
            banks.append(bank)
            refs.append(ref)
        payload["banks"] = tuple(banks)
    elif method == "mwaycca":
        sols, refs = [], []
        for m in range(len(freqs)):
            sol, ref = fit_mwaycca(TrialTensor.from_trials(trial_set(m, cfg.channels)),
                                   cfg.harmonics, fs, cfg.mway_tol, cfg.mway_max_iter)
            sols.append(sol)
            refs.append(ref)
        payload["solutions"] = tuple(sols)
    else:
        # phase is measured on the dedicated channel, not the recognition montage
        phase_sets = [trial_set(m, [cfg.phase_channel]) for m in range(len(freqs))]
        phases = pcca_mod.measure_training_phases(phase_sets, cfg.phase_channel)
        est = pcca_mod.estimate_latency(phases, freqs)
        refs = [pcca_mod.pcca_refs(f, cfg.harmonics, n_pts, fs, est.response_phase_deg[m],
                                   sine_only=cfg.pcca_sine_only)
                for m, f in enumerate(freqs)]
        payload["latency"] = est
    payload["training_runs"] = tuple(use)
    return TrainedModel(method, freqs, fs, cfg, tuple(refs), payload, time.perf_counter() - t0)


def recognize(model: TrainedModel, x: Epoch) -> RecognitionResult:
    """Score a preprocessed test epoch against every reference set.

    The epoch must carry the model's channels (in order) and window length.
    It is re-standardized here, which is a no-op for preprocessed input.
    Ties resolve to the lowest candidate frequency.
    """
    if x.channel_labels != model.config.channels or x.n_samples != model.n_samples:
        raise ShapeMismatchError(
            f"shape mismatch: model expects channels {list(model.config.channels)} x "
            f"{model.n_samples} samples, got {list(x.channel_labels)} x {x.n_samples}")
    z = standardize(x).samples
    scores = tuple(max_cca(z, ref.signals).rho for ref in model.refs)
    best = int(np.argmax(scores))
    return RecognitionResult(scores, best, model.stim_freqs_hz[best])


def recognize_raw(model: TrainedModel, e: Epoch) -> RecognitionResult:
    """Preprocess a raw trial with the model's configuration, then recognize it."""
    missing = [c for c in model.config.channels if c not in e.channel_labels]
    if missing:
        raise ShapeMismatchError(f"shape mismatch: trial lacks channels {missing}")
    if e.sample_rate_hz != model.sample_rate_hz:
        raise ShapeMismatchError(
            f"shape mismatch: trial sampled at {e.sample_rate_hz} Hz, model at {model.sample_rate_hz} Hz")
    return recognize(model, preprocess(e.unlabeled(), model.config))


# -- model directory -------------------------------------------------------

def save_model(model: TrainedModel, path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    doc: Dict[str, Any] = {
        "method": model.method,
        "stim_freqs_hz": list(model.stim_freqs_hz),
        "sample_rate_hz": model.sample_rate_hz,
        "config": model.config.to_dict(),
        "ref_shapes": [list(r.signals.shape) for r in model.refs],
        "ref_meta": [r.meta for r in model.refs],
    }
    for m, ref in enumerate(model.refs):
        write_f32(out / f"refs_f{m}.f32", ref.signals)
    if model.method == "msetcca":
        banks = model.payload["banks"]
        doc["eigenvalues"] = [b.eigenvalue for b in banks]
        doc["filter_shapes"] = [list(b.as_matrix().shape) for b in banks]
        for m, bank in enumerate(banks):
            write_f32(out / f"filters_f{m}.f32", bank.as_matrix())
    elif model.method == "pcca":
        est = model.payload["latency"]
        doc["latency"] = asdict(est)
    elif model.method == "mwaycca":
        doc["solutions"] = [{"w1": s.w1.tolist(), "w3": s.w3.tolist(), "v": s.v.tolist(),
                             "rho": s.rho, "iterations": s.iterations,
                             "converged": s.converged}
                            for s in model.payload["solutions"]]
    if "training_runs" in model.payload:
        doc["training_runs"] = list(model.payload["training_runs"])
    with open(out / MODEL_FILE, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def load_model(path) -> TrainedModel:
    root = Path(path)
    try:
        with open(root / MODEL_FILE, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"missing {MODEL_FILE} in {root}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt {MODEL_FILE}: {exc}") from None
    method = doc["method"]
    ref_method = "sincos" if method == "cca" else method
    freqs = tuple(doc["stim_freqs_hz"])
    refs = []
    for m, (shape, meta) in enumerate(zip(doc["ref_shapes"], doc["ref_meta"])):
        y = read_f32(root / f"refs_f{m}.f32", tuple(shape))
        refs.append(ReferenceSet(freqs[m], y, ref_method, meta))
    payload: Dict[str, Any] = {}
    if method == "msetcca":
        payload["banks"] = tuple(
            SpatialFilterBank(freqs[m], tuple(read_f32(root / f"filters_f{m}.f32", tuple(shape))),
                              eig)
            for m, (shape, eig) in enumerate(zip(doc["filter_shapes"], doc["eigenvalues"])))
    elif method == "pcca":
        lat = {k: tuple(v) if isinstance(v, list) else v for k, v in doc["latency"].items()}
        payload["latency"] = pcca_mod.LatencyEstimate(**lat)
    elif method == "mwaycca":
        payload["solutions"] = tuple(doc["solutions"])
    if "training_runs" in doc:
        payload["training_runs"] = tuple(doc["training_runs"])
    return TrainedModel(method, freqs, float(doc["sample_rate_hz"]),
                        TrainConfig.from_dict(doc["config"]), tuple(refs), payload)
