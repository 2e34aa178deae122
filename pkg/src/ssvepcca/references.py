"""Reference signal sets correlated against test epochs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .dsp import sample_times
from .errors import DataError

METHODS = ("sincos", "msetcca", "mwaycca", "pcca")


@dataclass(frozen=True, eq=False)
class ReferenceSet:
    """A Q x P block of reference rows for one stimulus frequency.

    ``meta`` holds the method-specific parameters, e.g. ``{"harmonics": 2}``
    for sine-cosine references or ``{"n_trials": 19}`` for MsetCCA.
    """

    stim_freq_hz: float
    signals: np.ndarray
    method: str
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        y = np.array(self.signals, dtype=float)
        if y.ndim == 1:
            y = y[np.newaxis, :]
        if y.ndim != 2 or y.shape[0] < 1:
            raise DataError(f"reference signals must be a non-empty Q x P matrix, got {y.shape}")
        if not np.all(np.isfinite(y)):
            raise DataError("reference signals contain non-finite values")
        if self.method not in METHODS:
            raise DataError(f"unknown reference method {self.method!r}")
        if self.method == "sincos" and "harmonics" in self.meta \
                and y.shape[0] != 2 * self.meta["harmonics"]:
            raise DataError("sine-cosine references must have 2H rows")
        y.setflags(write=False)
        object.__setattr__(self, "signals", y)
        object.__setattr__(self, "stim_freq_hz", float(self.stim_freq_hz))
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def n_rows(self) -> int:
        return self.signals.shape[0]

    @property
    def n_samples(self) -> int:
        return self.signals.shape[1]


def _check_harmonics(f: float, n_harmonics: int, n_samples: int, fs: float) -> None:
    if n_harmonics < 1:
        raise DataError(f"H must be a positive integer, got {n_harmonics}")
    if n_samples < 1:
        raise DataError(f"P must be positive, got {n_samples}")
    if not f > 0:
        raise DataError(f"frequency must be positive, got {f}")
    if n_harmonics * f >= fs / 2:
        raise DataError(
            f"harmonic {n_harmonics} of {f} Hz reaches Nyquist ({fs / 2} Hz)")


def harmonic_block(f: float, n_harmonics: int, n_samples: int, fs: float,
                   phase_deg: float = 0.0) -> np.ndarray:
    """Rows sin, cos of ``2 pi h f t + h phase`` for h = 1..H, t = 1/F..P/F."""
    _check_harmonics(f, n_harmonics, n_samples, fs)
    t = sample_times(n_samples, fs)
    y = np.empty((2 * n_harmonics, n_samples))
    for h in range(1, n_harmonics + 1):
        arg = 2 * np.pi * h * f * t + h * np.deg2rad(phase_deg)
        y[2 * h - 2] = np.sin(arg)
        y[2 * h - 1] = np.cos(arg)
    return y


def sincos_refs(f: float, n_harmonics: int, n_samples: int, fs: float) -> ReferenceSet:
    """Classical 2H x P sine-cosine references."""
    y = harmonic_block(f, n_harmonics, n_samples, fs)
    return ReferenceSet(f, y, "sincos", {"harmonics": int(n_harmonics)})
