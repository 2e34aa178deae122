"""Epochs, trial collections and the on-disk dataset archive.

Archive layout
--------------
A dataset directory holds ``manifest.json`` and one ``trial_f{m}_r{r}.f32``
file per (frequency index ``m``, run index ``r``). Each trial file stores
``C * P`` little-endian float32 values, channel-major. Manifest keys are
``sample_rate_hz``, ``channel_labels``, ``stim_freqs_hz``, ``runs``,
``n_samples`` and an optional ``generator`` block.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError, ShapeMismatchError

MANIFEST_NAME = "manifest.json"
DISK_DTYPE = np.dtype("<f4")


def trial_filename(m: int, r: int) -> str:
    return f"trial_f{m}_r{r}.f32"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Epoch:
    """One multichannel trial segment.

    Parameters
    ----------
    samples : ndarray, shape (C, P)
        Channel-major samples, stored as float64.
    channel_labels : sequence of str
        One distinct label per row.
    sample_rate_hz : float
    stim_freq_hz : float, optional
        Attended stimulus frequency; ``None`` for unlabeled test data.
    """

    samples: np.ndarray
    channel_labels: Tuple[str, ...]
    sample_rate_hz: float
    stim_freq_hz: Optional[float] = None

    def __post_init__(self):
        x = _frozen(self.samples)
        if x.ndim != 2:
            raise ShapeMismatchError(f"shape mismatch: epoch samples must be 2-D, got {x.shape}")
        n_ch, n_pts = x.shape
        if n_ch < 1 or n_pts < 2:
            raise ShapeMismatchError(f"shape mismatch: epoch needs C >= 1 and P >= 2, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DataError("epoch contains non-finite samples")
        labels = tuple(str(c) for c in self.channel_labels)
        if len(labels) != n_ch:
            raise ShapeMismatchError(
                f"shape mismatch: {len(labels)} channel labels for {n_ch} rows")
        if len(set(labels)) != n_ch:
            raise DataError(f"duplicate channel labels in {labels}")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise DataError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if self.stim_freq_hz is not None and not self.stim_freq_hz > 0:
            raise DataError(f"stimulus frequency must be positive, got {self.stim_freq_hz}")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "channel_labels", labels)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        if self.stim_freq_hz is not None:
            object.__setattr__(self, "stim_freq_hz", float(self.stim_freq_hz))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def with_samples(self, samples: np.ndarray) -> "Epoch":
        """Same metadata, new sample matrix of identical shape."""
        samples = np.asarray(samples)
        if samples.shape != self.samples.shape:
            raise ShapeMismatchError(
                f"shape mismatch: expected {self.samples.shape}, got {samples.shape}")
        return Epoch(samples, self.channel_labels, self.sample_rate_hz, self.stim_freq_hz)

    def unlabeled(self) -> "Epoch":
        """Copy with the stimulus label removed, for the recognition path."""
        return Epoch(self.samples, self.channel_labels, self.sample_rate_hz, None)

    def __eq__(self, other):
        if not isinstance(other, Epoch):
            return NotImplemented
        return (self.channel_labels == other.channel_labels
                and self.sample_rate_hz == other.sample_rate_hz
                and self.stim_freq_hz == other.stim_freq_hz
                and self.samples.shape == other.samples.shape
                and np.array_equal(self.samples, other.samples))

    __hash__ = None


@dataclass(frozen=True)
class TrialSet:
    """N same-frequency training trials with identical geometry."""

    stim_freq_hz: float
    trials: Tuple[Epoch, ...]

    def __post_init__(self):
        trials = tuple(self.trials)
        if len(trials) < 2:
            raise DataError(f"a trial set needs N >= 2 trials, got {len(trials)}")
        ref = trials[0]
        for i, e in enumerate(trials[1:], start=1):
            if (e.samples.shape != ref.samples.shape
                    or e.channel_labels != ref.channel_labels
                    or e.sample_rate_hz != ref.sample_rate_hz):
                raise ShapeMismatchError(
                    f"shape mismatch: trial {i} has shape {e.samples.shape} "
                    f"and labels {e.channel_labels}, expected {ref.samples.shape} "
                    f"and {ref.channel_labels}")
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "stim_freq_hz", float(self.stim_freq_hz))

    def __len__(self):
        return len(self.trials)

    @property
    def channel_labels(self) -> Tuple[str, ...]:
        return self.trials[0].channel_labels

    @property
    def sample_rate_hz(self) -> float:
        return self.trials[0].sample_rate_hz

    def stack(self) -> np.ndarray:
        """Trials as an (N, C, P) array."""
        return np.stack([e.samples for e in self.trials])


@dataclass(frozen=True, eq=False)
class Dataset:
    """A recording session: one trial per (frequency index, run index)."""

    stim_freqs_hz: Tuple[float, ...]
    runs: int
    trials: Mapping[Tuple[int, int], Epoch]
    manifest: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.stim_freqs_hz)
        if len(freqs) < 2:
            raise DataError(f"a dataset needs M >= 2 stimulus frequencies, got {len(freqs)}")
        if any(b <= a for a, b in zip(freqs, freqs[1:])) or freqs[0] <= 0:
            raise DataError(f"stimulus frequencies must be positive and strictly increasing: {freqs}")
        if int(self.runs) < 1:
            raise DataError(f"runs must be >= 1, got {self.runs}")
        expected = {(m, r) for m in range(len(freqs)) for r in range(int(self.runs))}
        keys = set(self.trials)
        if keys != expected:
            missing = sorted(expected - keys)
            extra = sorted(keys - expected)
            raise DataError(f"trial grid incomplete: missing {missing[:5]}, unexpected {extra[:5]}")
        first = self.trials[(0, 0)]
        for key, e in self.trials.items():
            if (e.channel_labels != first.channel_labels
                    or e.sample_rate_hz != first.sample_rate_hz
                    or e.samples.shape != first.samples.shape):
                raise ShapeMismatchError(f"shape mismatch: trial {key} disagrees with trial (0, 0)")
        object.__setattr__(self, "stim_freqs_hz", freqs)
        object.__setattr__(self, "runs", int(self.runs))
        object.__setattr__(self, "trials", dict(sorted(self.trials.items())))
        object.__setattr__(self, "manifest", dict(self.manifest))

    @property
    def sample_rate_hz(self) -> float:
        return self.trials[(0, 0)].sample_rate_hz

    @property
    def channel_labels(self) -> Tuple[str, ...]:
        return self.trials[(0, 0)].channel_labels

    @property
    def n_samples(self) -> int:
        return self.trials[(0, 0)].n_samples

    def trial(self, m: int, r: int) -> Epoch:
        return self.trials[(m, r)]

    def trial_set(self, m: int, runs: Iterable[int]) -> TrialSet:
        return TrialSet(self.stim_freqs_hz[m], tuple(self.trials[(m, r)] for r in runs))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.stim_freqs_hz == other.stim_freqs_hz and self.runs == other.runs
                and self.trials.keys() == other.trials.keys()
                and all(self.trials[k] == other.trials[k] for k in self.trials))

    __hash__ = None


def build_manifest(stim_freqs_hz: Sequence[float], runs: int, labels: Sequence[str],
                   sample_rate_hz: float, n_samples: int,
                   generator: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    manifest: Dict[str, Any] = {
        "sample_rate_hz": float(sample_rate_hz),
        "channel_labels": list(labels),
        "stim_freqs_hz": [float(f) for f in stim_freqs_hz],
        "runs": int(runs),
        "n_samples": int(n_samples),
    }
    if generator is not None:
        manifest["generator"] = dict(generator)
    return manifest


def save_dataset(ds: Dataset, path) -> Path:
    """Write ``ds`` as a dataset archive directory and return its path.

    Samples are narrowed to float32 on disk.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest(ds.stim_freqs_hz, ds.runs, ds.channel_labels,
                              ds.sample_rate_hz, ds.n_samples, ds.manifest.get("generator"))
    with open(out / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for (m, r), e in ds.trials.items():
        write_f32(out / trial_filename(m, r), e.samples)
    return out


def write_f32(path, array: np.ndarray) -> None:
    np.ascontiguousarray(array, dtype=DISK_DTYPE).tofile(path)


def read_f32(path, shape: Tuple[int, int]) -> np.ndarray:
    """Read a row-major float32 matrix of the given shape as float64."""
    raw = np.fromfile(path, dtype=DISK_DTYPE)
    if raw.size != shape[0] * shape[1]:
        raise ShapeMismatchError(
            f"shape mismatch: {Path(path).name} holds {raw.size} values, "
            f"expected {shape[0]}x{shape[1]}={shape[0] * shape[1]}")
    out = raw.astype(np.float64).reshape(shape)
    if not np.all(np.isfinite(out)):
        raise DataError(f"{Path(path).name} contains non-finite values")
    return out


def read_manifest(path) -> Dict[str, Any]:
    mpath = Path(path) / MANIFEST_NAME
    try:
        with open(mpath, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"missing manifest: {mpath}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataError(f"corrupt manifest {mpath}: {exc}") from None
    required = ("sample_rate_hz", "channel_labels", "stim_freqs_hz", "runs")
    if not isinstance(manifest, dict) or any(k not in manifest for k in required):
        raise DataError(f"corrupt manifest {mpath}: required keys {required}")
    return manifest


def _infer_n_samples(path: Path, n_channels: int) -> int:
    size = (path / trial_filename(0, 0)).stat().st_size // DISK_DTYPE.itemsize
    if size % n_channels:
        raise ShapeMismatchError(
            f"shape mismatch: {size} values in {trial_filename(0, 0)} "
            f"not divisible by {n_channels} channels")
    return size // n_channels


def load_dataset(path) -> Dataset:
    """Load a dataset archive written by :func:`save_dataset`."""
    root = Path(path)
    manifest = read_manifest(root)
    labels = [str(c) for c in manifest["channel_labels"]]
    freqs = [float(f) for f in manifest["stim_freqs_hz"]]
    runs = int(manifest["runs"])
    fs = float(manifest["sample_rate_hz"])
    try:
        n_samples = int(manifest["n_samples"]) if "n_samples" in manifest \
            else _infer_n_samples(root, len(labels))
    except FileNotFoundError:
        raise DataError(f"missing trial file {trial_filename(0, 0)} in {root}") from None
    trials = {}
    for m, f in enumerate(freqs):
        for r in range(runs):
            fpath = root / trial_filename(m, r)
            if not fpath.exists():
                raise DataError(f"missing trial file {fpath.name} in {root}")
            x = read_f32(fpath, (len(labels), n_samples))
            trials[(m, r)] = Epoch(x, labels, fs, f)
    return Dataset(freqs, runs, trials, manifest)


def slice_epoch(e: Epoch, channels: Sequence[str], tw_seconds: float) -> Epoch:
    """Select channels by label (in the given order) and keep the leading window.

    The window keeps the first ``floor(tw_seconds * F)`` samples.
    """
    if not tw_seconds > 0:
        raise DataError(f"time window must be positive, got {tw_seconds}")
    index = {c: i for i, c in enumerate(e.channel_labels)}
    missing = [c for c in channels if c not in index]
    if missing:
        raise DataError(f"unknown channel label(s) {missing}; available {list(e.channel_labels)}")
    # tolerate representation error in tw * F (e.g. 0.3 * 250)
    n_keep = int(math.floor(tw_seconds * e.sample_rate_hz + 1e-9))
    if n_keep > e.n_samples:
        raise DataError(
            f"time window {tw_seconds} s needs {n_keep} samples, trial has {e.n_samples}")
    if n_keep < 2:
        raise DataError(f"time window {tw_seconds} s keeps fewer than 2 samples")
    rows = [index[c] for c in channels]
    return Epoch(e.samples[rows, :n_keep], list(channels), e.sample_rate_hz, e.stim_freq_hz)

