"""Synthetic SSVEP datasets.

Each trial at stimulus frequency f carries, on channel c,

    gain_c * sum_h decay**(h-1) * sin(2 pi h f t + h phi_r + jitter)

with phi_r = -L f 360 deg from the configured apparent latency L, plus
white or pink background noise scaled to the requested trial SNR.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .data import Dataset, Epoch
from .dsp import sample_times
from .errors import DataError

PAPER_FREQS = (6.0, 8.0, 9.0, 10.0)
PAPER_SAMPLE_RATE = 250.0
PAPER_RUNS = 20
PAPER_TRIAL_SECONDS = 4.0

CHANNEL_SETS: Dict[str, Tuple[str, ...]] = {
    "paper4": ("P3", "P4", "O1", "O2"),
    "paper6": ("P7", "P3", "P4", "P8", "O1", "O2"),
    "paper8": ("P7", "P3", "Pz", "P4", "P8", "O1", "Oz", "O2"),
}
# 30 scalp positions of the 10-20 system; the last eight form "paper8"
PAPER30 = ("FP1", "FP2", "F7", "F3", "Fz", "F4", "F8", "FT7", "FC3", "FCz", "FC4",
           "FT8", "T7", "C3", "Cz", "C4", "T8", "TP7", "CP3", "CPz", "CP4", "TP8",
           ) + CHANNEL_SETS["paper8"]
CHANNEL_SETS["paper30"] = PAPER30

# nominal SSVEP gain by position; unlisted channels get FRONTAL_GAIN
POSTERIOR_GAIN = {"Oz": 1.0, "O1": 0.9, "O2": 0.9, "Pz": 0.6, "P3": 0.5, "P4": 0.5,
                  "P7": 0.4, "P8": 0.4, "CPz": 0.25, "CP3": 0.2, "CP4": 0.2,
                  "TP7": 0.15, "TP8": 0.15}
FRONTAL_GAIN = 0.05


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of one synthetic recording session (one subject)."""

    stim_freqs_hz: Tuple[float, ...] = PAPER_FREQS
    sample_rate_hz: float = PAPER_SAMPLE_RATE
    channels: Tuple[str, ...] = CHANNEL_SETS["paper8"]
    runs: int = PAPER_RUNS
    trial_seconds: float = PAPER_TRIAL_SECONDS
    harmonics: int = 3
    harmonic_decay: float = 0.5
    latency_s: float = 0.135
    phase_jitter_deg: float = 10.0
    snr_db: float = -10.0
    noise_model: str = "pink"
    spatial_profile: Optional[Tuple[float, ...]] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "stim_freqs_hz", tuple(float(f) for f in self.stim_freqs_hz))
        object.__setattr__(self, "channels", tuple(str(c) for c in self.channels))
        if self.spatial_profile is not None:
            object.__setattr__(self, "spatial_profile", tuple(float(g) for g in self.spatial_profile))
        self.validate()

    def validate(self) -> None:
        nyq = self.sample_rate_hz / 2
        if len(self.stim_freqs_hz) < 2:
            raise DataError("generator needs at least 2 stimulus frequencies")
        if any(b <= a for a, b in zip(self.stim_freqs_hz, self.stim_freqs_hz[1:])):
            raise DataError("stimulus frequencies must be strictly increasing")
        if self.harmonics < 1 or self.stim_freqs_hz[0] <= 0:
            raise DataError("harmonics and frequencies must be positive")
        if self.harmonics * self.stim_freqs_hz[-1] >= nyq:
            raise DataError(
                f"harmonic {self.harmonics} of {self.stim_freqs_hz[-1]} Hz reaches Nyquist ({nyq} Hz)")
        if self.runs < 2:
            raise DataError(f"generator needs runs >= 2, got {self.runs}")
        if self.trial_seconds * self.sample_rate_hz < 2:
            raise DataError("trial too short")
        if not self.harmonic_decay > 0:
            raise DataError("harmonic_decay must be positive")
        if self.phase_jitter_deg < 0:
            raise DataError("phase_jitter_deg must be nonnegative")
        if self.noise_model not in ("white", "pink"):
            raise DataError(f"noise_model must be 'white' or 'pink', got {self.noise_model!r}")
        if len(set(self.channels)) != len(self.channels) or not self.channels:
            raise DataError("channels must be distinct and non-empty")
        if self.spatial_profile is not None and len(self.spatial_profile) != len(self.channels):
            raise DataError("spatial_profile needs one gain per channel")
        if not math.isfinite(self.snr_db):
            raise DataError("snr_db must be finite")

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.trial_seconds * self.sample_rate_hz + 1e-9))

    def gains(self) -> np.ndarray:
        if self.spatial_profile is not None:
            return np.asarray(self.spatial_profile)
        return np.array([POSTERIOR_GAIN.get(c, FRONTAL_GAIN) for c in self.channels])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stim_freqs_hz"] = list(self.stim_freqs_hz)
        d["channels"] = list(self.channels)
        if self.spatial_profile is not None:
            d["spatial_profile"] = list(self.spatial_profile)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        d = dict(d)
        for key in ("stim_freqs_hz", "channels", "spatial_profile"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


def response_phase_deg(cfg: GeneratorConfig, f: float) -> float:
    return -cfg.latency_s * f * 360.0


def pink_noise(rng: np.random.Generator, shape: Tuple[int, int]) -> np.ndarray:
    """Noise with 1/f power: white spectrum shaped by 1/sqrt(f) magnitude."""
    n = shape[-1]
    spec = np.fft.rfft(rng.standard_normal(shape), axis=-1)
    k = np.arange(spec.shape[-1], dtype=float)
    scale = np.zeros_like(k)
    scale[1:] = 1.0 / np.sqrt(k[1:])
    return np.fft.irfft(spec * scale, n=n, axis=-1)


def trial_rng(seed: int, m: int, r: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(m), int(r)])


def synthesize_trial(cfg: GeneratorConfig, m: int, r: int) -> Tuple[np.ndarray, np.ndarray]:
    """Signal and scaled noise components (each C x P) of trial (m, r)."""
    rng = trial_rng(cfg.seed, m, r)
    f = cfg.stim_freqs_hz[m]
    t = sample_times(cfg.n_samples, cfg.sample_rate_hz)
    jitter = np.deg2rad(rng.normal(0.0, cfg.phase_jitter_deg)) if cfg.phase_jitter_deg else 0.0
    phi_r = np.deg2rad(response_phase_deg(cfg, f))
    wave = np.zeros_like(t)
    for h in range(1, cfg.harmonics + 1):
        wave += cfg.harmonic_decay ** (h - 1) * np.sin(2 * np.pi * h * f * t + h * phi_r + jitter)
    sig = cfg.gains()[:, np.newaxis] * wave[np.newaxis, :]

    shape = (len(cfg.channels), cfg.n_samples)
    noise = rng.standard_normal(shape) if cfg.noise_model == "white" else pink_noise(rng, shape)
    noise -= noise.mean(axis=1, keepdims=True)
    p_sig = float(np.mean(sig ** 2))
    p_noise = float(np.mean(noise ** 2))
    noise *= math.sqrt(p_sig / (p_noise * 10 ** (cfg.snr_db / 10)))
    return sig, noise


def generate(cfg: GeneratorConfig) -> Dataset:
    """Deterministic synthetic dataset; samples are float32-representable."""
    trials = {}
    for m, f in enumerate(cfg.stim_freqs_hz):
        for r in range(cfg.runs):
            sig, noise = synthesize_trial(cfg, m, r)
            x = (sig + noise).astype(np.float32).astype(np.float64)
            trials[(m, r)] = Epoch(x, cfg.channels, cfg.sample_rate_hz, f)
    manifest = {
        "sample_rate_hz": cfg.sample_rate_hz,
        "channel_labels": list(cfg.channels),
        "stim_freqs_hz": list(cfg.stim_freqs_hz),
        "runs": cfg.runs,
        "n_samples": cfg.n_samples,
        "generator": cfg.to_dict(),
    }
    return Dataset(cfg.stim_freqs_hz, cfg.runs, trials, manifest)


def paper_config(seed: int = 0, **overrides) -> GeneratorConfig:
    """Session constants of the reference experiment: 4 targets, 30 channels, 20 runs."""
    base = GeneratorConfig(channels=PAPER30, seed=seed)
    return replace(base, **overrides)


def subject_config(subject: int, base_seed: int = 0, channels: Sequence[str] = PAPER30,
                   snr_center_db: float = -10.0, **overrides) -> GeneratorConfig:
    """One member of the ten-subject fixture.

    Latency, spatial gains and SNR vary with the subject index; the seed is
    derived from ``base_seed`` and ``subject`` so subjects are independent.
    """
    rng = np.random.default_rng([int(base_seed), 1000 + int(subject)])
    latency = float(np.round(rng.uniform(0.10, 0.16), 4))
    snr = float(np.round(snr_center_db + rng.uniform(-3.0, 3.0), 2))
    nominal = np.array([POSTERIOR_GAIN.get(c, FRONTAL_GAIN) for c in channels])
    gains = nominal * rng.uniform(0.6, 1.4, size=nominal.size)
    params = dict(channels=tuple(channels), latency_s=latency, snr_db=snr,
                  spatial_profile=tuple(np.round(gains, 4).tolist()),
                  seed=int(base_seed) * 100 + int(subject))
    params.update(overrides)
    if "channels" in overrides and "spatial_profile" not in overrides:
        params["spatial_profile"] = None
    return GeneratorConfig(**params)


# Phase-stable responses with a rich harmonic series: a waveform that two
# sine-cosine harmonics describe only partly, as in real low-frequency SSVEPs.
PHASE_STABLE = dict(phase_jitter_deg=0.0, harmonics=4, harmonic_decay=0.9)
PHASE_STABLE_SNR_DB = -17.0


def fixture_configs(n_subjects: int = 10, base_seed: int = 0, **overrides):
    return [subject_config(s, base_seed, **overrides) for s in range(n_subjects)]


def phase_stable_configs(n_subjects: int = 10, base_seed: int = 0,
                         snr_center_db: float = PHASE_STABLE_SNR_DB, **overrides):
    """Ten-subject fixture with phase-locked, harmonic-rich responses."""
    params = dict(PHASE_STABLE, snr_center_db=snr_center_db)
    params.update(overrides)
    return fixture_configs(n_subjects, base_seed, **params)
