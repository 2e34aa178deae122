"""Phase-constrained CCA: apparent-latency estimation and phase-shifted references.

The response phase at stimulus frequency f is modeled as
phi_r(f) = -L * f * 360 deg for one apparent latency L shared by all
frequencies. Measured phases are only known modulo 360 deg, so L is found
by a weighted least-squares grid search over wrapped phase errors.

Phases here are sine-referenced: a response ``sin(2 pi f t + phi)`` has
phase ``phi``, matching the reference rows and the stimulus model. This
is the cosine-referenced phase from :func:`ssvepcca.dsp.single_bin_phase`
plus 90 deg.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .data import TrialSet
from .dsp import PhaseMeasurement, single_bin_phase, wrap_deg
from .errors import DataError
from .references import ReferenceSet, harmonic_block

SINE_OFFSET_DEG = 90.0


@dataclass(frozen=True)
class PhaseSummary(PhaseMeasurement):
    """Circular mean over training trials at one frequency.

    ``resultant_length`` is the mean resultant length of the unit phasors
    (1 for identical phases, near 0 for uniformly spread ones).
    """

    resultant_length: float = 1.0

    @property
    def weight(self) -> float:
        return self.resultant_length * self.amplitude


@dataclass(frozen=True)
class LatencyEstimate:
    latency_s: float
    freqs_hz: Tuple[float, ...]
    measured_phase_deg: Tuple[float, ...]
    response_phase_deg: Tuple[float, ...]
    cycle_counts: Tuple[int, ...]
    weights: Tuple[float, ...]
    fit_residual: float

    def response_phase(self, f: float) -> float:
        return self.response_phase_deg[self.freqs_hz.index(float(f))]


def circular_mean_deg(phases_deg, weights=None) -> Tuple[float, float]:
    """Circular mean (degrees, [-180, 180)) and mean resultant length."""
    ph = np.deg2rad(np.asarray(phases_deg, dtype=float))
    w = np.ones_like(ph) if weights is None else np.asarray(weights, dtype=float)
    vec = np.sum(w * np.exp(1j * ph)) / np.sum(w)
    return float(wrap_deg(np.rad2deg(np.angle(vec)))), float(np.abs(vec))


def measure_training_phases(trial_sets: Sequence[TrialSet], oz_label: str = "Oz"
                            ) -> Tuple[PhaseSummary, ...]:
    """Sine-referenced phase at each trial set's frequency on one channel."""
    out = []
    for ts in trial_sets:
        if oz_label not in ts.channel_labels:
            raise DataError(f"phase channel {oz_label!r} missing; available {list(ts.channel_labels)}")
        row = ts.channel_labels.index(oz_label)
        meas = [single_bin_phase(e.samples[row], ts.stim_freq_hz, e.sample_rate_hz)
                for e in ts.trials]
        phases = [m.phase_deg + SINE_OFFSET_DEG for m in meas]
        mean, resultant = circular_mean_deg(phases)
        amp = float(np.mean([m.amplitude for m in meas]))
        out.append(PhaseSummary(ts.stim_freq_hz, mean, amp, resultant))
    return tuple(out)


def response_phase_deg(latency_s: float, f: float) -> float:
    """Unwrapped response phase -L f 360."""
    return -latency_s * f * 360.0


def estimate_latency(phases: Sequence[PhaseMeasurement], freqs: Sequence[float],
                     search_max_s: float = 0.4, step_s: float = 0.0005,
                     weights: Optional[Sequence[float]] = None) -> LatencyEstimate:
    """Grid-search the apparent latency minimizing weighted squared phase error.

    Parameters
    ----------
    phases : sequence of PhaseMeasurement
        Measured phase per frequency, same order as ``freqs``.
    freqs : sequence of float
    search_max_s, step_s : float
        Candidates are ``k * step_s`` for k = 0 .. floor(search_max_s / step_s).
    weights : sequence of float, optional
        Defaults to each measurement's ``weight`` attribute when present
        (resultant length times amplitude), otherwise equal weights.

    Ties resolve toward the smaller latency.
    """
    if len(phases) == 0:
        raise DataError("no phase measurements given")
    if len(phases) != len(freqs):
        raise DataError(f"{len(phases)} phases for {len(freqs)} frequencies")
    if len(freqs) < 2:
        raise DataError("latency fit needs M >= 2 frequencies")
    if step_s <= 0 or search_max_s < 0:
        raise DataError("search grid must have positive step and nonnegative span")
    f = np.asarray(freqs, dtype=float)
    phi_s = np.array([p.phase_deg for p in phases], dtype=float)
    if weights is None:
        w = np.array([getattr(p, "weight", 1.0) for p in phases], dtype=float)
    else:
        w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.any(w > 0):
        raise DataError("weights must be nonnegative and not all zero")

    n_steps = int(np.floor(search_max_s / step_s + 1e-9))
    grid = np.arange(n_steps + 1) * step_s
    predicted = -np.outer(grid, f) * 360.0
    err = wrap_deg(predicted - phi_s)
    cost = (err ** 2) @ w
    best = int(np.argmin(cost))
    latency = float(grid[best])

    phi_r = tuple(response_phase_deg(latency, fm) for fm in f)
    cycles = tuple(int(np.round(latency * fm + ps / 360.0)) for fm, ps in zip(f, phi_s))
    return LatencyEstimate(latency, tuple(float(x) for x in f), tuple(phi_s.tolist()),
                           phi_r, cycles, tuple(w.tolist()), float(cost[best]))


def pcca_refs(f: float, n_harmonics: int, n_samples: int, fs: float, phi_r_deg: float,
              sine_only: bool = False) -> ReferenceSet:
    """Sine-cosine references with harmonic h shifted by ``h * phi_r``.

    ``sine_only=True`` keeps only the H phase-shifted sine rows. With full
    sine/cosine pairs each harmonic spans the same plane for any phase,
    so CCA scores do not depend on ``phi_r``; the sine-only set is the
    variant in which the phase constraint changes recognition.
    """
    y = harmonic_block(f, n_harmonics, n_samples, fs, phase_deg=phi_r_deg)
    if sine_only:
        y = y[0::2]
    return ReferenceSet(f, y, "pcca", {"harmonics": int(n_harmonics),
                                       "phi_r_deg": float(phi_r_deg),
                                       "sine_only": bool(sine_only)})
