"""Signal conditioning: standardization, band-pass filtering, single-bin phase."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .data import Epoch
from .errors import DataError


@dataclass(frozen=True)
class BandpassSpec:
    """Butterworth band edges (Hz) and total pole count.

    The order is split evenly between a high-pass at ``low_hz`` and a
    low-pass at ``high_hz``.
    """

    low_hz: float = 4.0
    high_hz: float = 45.0
    order: int = 6

    def __post_init__(self):
        if not (0 < self.low_hz < self.high_hz):
            raise DataError(f"band edges must satisfy 0 < low < high, got {self.low_hz}, {self.high_hz}")
        if self.order < 2 or self.order % 2:
            raise DataError(f"order must be an even positive integer, got {self.order}")

    def check(self, fs: float) -> None:
        if self.high_hz >= fs / 2:
            raise DataError(
                f"band edge {self.high_hz} Hz is at or above Nyquist ({fs / 2} Hz)")


@dataclass(frozen=True)
class PhaseMeasurement:
    """Cosine-referenced phase (degrees, [-180, 180)) and amplitude at one frequency."""

    freq_hz: float
    phase_deg: float
    amplitude: float


def wrap_deg(phase):
    """Wrap degrees into [-180, 180)."""
    return (np.asarray(phase, dtype=float) + 180.0) % 360.0 - 180.0


def standardize(e: Epoch) -> Epoch:
    """Zero mean, unit population variance per channel."""
    x = e.samples
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    sd = np.sqrt(np.mean(xc * xc, axis=1, keepdims=True))
    # relative floor: round-off of a constant row leaves sd ~ eps * |mean|
    floor = 1e-12 * np.maximum(np.abs(mu), 1.0)
    flat = np.flatnonzero(sd[:, 0] <= floor[:, 0])
    if flat.size:
        names = [e.channel_labels[i] for i in flat]
        raise DataError(f"cannot standardize constant channel(s) {names}")
    z = xc / sd
    # second centering pass removes the residual mean left by division round-off
    z -= z.mean(axis=1, keepdims=True)
    return e.with_samples(z)


def design_bandpass(spec: BandpassSpec, fs: float) -> np.ndarray:
    """Second-order sections: Butterworth high-pass cascaded with low-pass."""
    spec.check(fs)
    half = spec.order // 2
    hp = signal.butter(half, spec.low_hz, btype="highpass", fs=fs, output="sos")
    lp = signal.butter(half, spec.high_hz, btype="lowpass", fs=fs, output="sos")
    return np.vstack([hp, lp])


def bandpass_array(x: np.ndarray, spec: BandpassSpec, fs: float) -> np.ndarray:
    """Causal forward filtering along the last axis."""
    return signal.sosfilt(design_bandpass(spec, fs), np.asarray(x, dtype=float), axis=-1)


def bandpass(e: Epoch, spec: BandpassSpec = BandpassSpec()) -> Epoch:
    return e.with_samples(bandpass_array(e.samples, spec, e.sample_rate_hz))


def magnitude_response_db(spec: BandpassSpec, fs: float, freqs_hz) -> np.ndarray:
    """Filter gain in dB at the requested frequencies."""
    _, h = signal.sosfreqz(design_bandpass(spec, fs), worN=np.atleast_1d(freqs_hz), fs=fs)
    return 20 * np.log10(np.abs(h))


def sample_times(n_samples: int, fs: float) -> np.ndarray:
    """Sample instants 1/F, 2/F, ..., P/F shared by references and phase fits."""
    return np.arange(1, n_samples + 1) / fs


def single_bin_phase(x, f: float, fs: float) -> PhaseMeasurement:
    """Least-squares fit of ``A cos(2 pi f t + phi)`` on the reference time grid.

    Solves the 2-column normal equations for the cosine and sine
    coefficients, so ``f`` need not sit on an FFT bin.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if not 0 < f < fs / 2:
        raise DataError(f"frequency {f} Hz must lie in (0, {fs / 2}) Hz")
    if f * n / fs < 2:
        raise DataError(f"{n} samples cover fewer than 2 cycles of {f} Hz")
    if fs / 2 - f < 2 * fs / n:
        raise DataError(f"frequency {f} Hz too close to Nyquist for {n} samples")
    arg = 2 * np.pi * f * sample_times(n, fs)
    basis = np.column_stack([np.cos(arg), np.sin(arg)])
    (a, b), *_ = np.linalg.lstsq(basis, x, rcond=None)
    # a cos + b sin = A cos(arg + phi) with A cos phi = a, A sin phi = -b
    amplitude = math.hypot(a, b)
    phase = float(wrap_deg(math.degrees(math.atan2(-b, a))))
    return PhaseMeasurement(float(f), phase, amplitude)
