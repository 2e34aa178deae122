import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssvepcca.data import Epoch
from ssvepcca.dsp import (BandpassSpec, bandpass_array, magnitude_response_db, single_bin_phase,
                          standardize, wrap_deg)
from ssvepcca.errors import DataError

FS = 250.0


def steady_state_gain_db(freq, spec=BandpassSpec(), fs=FS, seconds=40.0):
    """Gain measured by filtering a long sinusoid and fitting its tail."""
    t = np.arange(int(seconds * fs)) / fs
    y = bandpass_array(np.sin(2 * np.pi * freq * t), spec, fs)
    tail = slice(len(t) // 2, None)
    basis = np.column_stack([np.sin(2 * np.pi * freq * t[tail]), np.cos(2 * np.pi * freq * t[tail])])
    coef, *_ = np.linalg.lstsq(basis, y[tail], rcond=None)
    return 20 * np.log10(np.hypot(*coef))


@pytest.mark.parametrize("freq", [0.5, 4.0, 10.0, 45.0, 100.0])
def test_response_matches_simulated_gain(freq):
    assert magnitude_response_db(BandpassSpec(), FS, [freq])[0] == pytest.approx(
        steady_state_gain_db(freq), abs=0.05)


def test_passband_is_flat():
    gains = magnitude_response_db(BandpassSpec(), FS, [8.0, 12.0, 20.0, 30.0])
    assert np.all(np.abs(gains) < 1.0)


def test_bandpass_spec_validation():
    with pytest.raises(DataError):
        BandpassSpec(10.0, 5.0)
    with pytest.raises(DataError):
        BandpassSpec(order=5)
    with pytest.raises(DataError, match="Nyquist"):
        magnitude_response_db(BandpassSpec(high_hz=60.0), 100.0, [10.0])


def test_in_band_rms_preserved():
    t = np.arange(int(5 * FS)) / FS
    x = np.sin(2 * np.pi * 20 * t)
    y = bandpass_array(x, BandpassSpec(), FS)
    keep = slice(int(FS), None)
    assert np.sqrt(np.mean(y[keep] ** 2)) >= 0.9 * np.sqrt(np.mean(x[keep] ** 2))


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), seed=st.integers(0, 2**31))
def test_bandpass_is_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 300))
    lhs = bandpass_array(a * x + b * y, BandpassSpec(), FS)
    rhs = a * bandpass_array(x, BandpassSpec(), FS) + b * bandpass_array(y, BandpassSpec(), FS)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_bandpass_is_causal():
    x = np.zeros(500)
    x[200] = 1.0
    y = bandpass_array(x, BandpassSpec(), FS)
    assert np.all(y[:200] == 0)
    assert np.any(y[200:] != 0)


def test_standardize_moments(rng):
    x = rng.standard_normal((4, 300)) * [[1], [5], [0.1], [30]] + [[3], [-2], [0], [100]]
    z = standardize(Epoch(x, list("abcd"), FS)).samples
    np.testing.assert_allclose(z.mean(axis=1), 0, atol=1e-14)
    np.testing.assert_allclose(z.var(axis=1), 1, rtol=1e-12)


def test_standardize_names_flat_channel(rng):
    x = rng.standard_normal((3, 50))
    x[1] = 7.25
    with pytest.raises(DataError, match="'b'"):
        standardize(Epoch(x, list("abc"), FS))


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(1e-3, 1e3), shift=st.floats(-1e3, 1e3), seed=st.integers(0, 2**31))
def test_standardize_affine_invariance(scale, shift, seed):
    x = np.random.default_rng(seed).standard_normal((2, 64))
    a = standardize(Epoch(x, ["a", "b"], FS)).samples
    b = standardize(Epoch(scale * x + shift, ["a", "b"], FS)).samples
    np.testing.assert_allclose(a, b, atol=1e-8)


@given(st.floats(-1e4, 1e4))
def test_wrap_deg_range(p):
    w = float(wrap_deg(p))
    assert -180.0 <= w < 180.0
    assert math.isclose(math.cos(math.radians(w)), math.cos(math.radians(p)), abs_tol=1e-9)


def fft_phase_deg(x, f, fs):
    """Cosine phase from the FFT bin at f, valid for an integer number of cycles.

    The FFT treats the first sample as t=0 while the fit uses t=1/F, so the
    bin phase leads the fitted phase by one sample.
    """
    n = len(x)
    k = int(round(f * n / fs))
    return float(wrap_deg(np.degrees(np.angle(np.fft.rfft(x)[k])) - 360.0 * f / fs))


@settings(max_examples=40, deadline=None)
@given(phase=st.floats(-179.0, 179.0), amp=st.floats(0.1, 10.0),
       f=st.sampled_from([6.0, 8.0, 9.0, 10.0, 12.5]))
def test_single_bin_phase_against_fft(phase, amp, f):
    t = np.arange(1, 1001) / FS
    x = amp * np.cos(2 * np.pi * f * t + np.radians(phase)) + 0.3 * np.cos(2 * np.pi * 2 * f * t)
    m = single_bin_phase(x, f, FS)
    assert m.amplitude == pytest.approx(amp, rel=1e-9)
    assert float(wrap_deg(m.phase_deg - phase)) == pytest.approx(0, abs=1e-7)
    assert float(wrap_deg(m.phase_deg - fft_phase_deg(x, f, FS))) == pytest.approx(0, abs=1e-7)


def test_single_bin_phase_off_bin():
    # 9.3 Hz over 1 s is not an integer cycle count; least squares still recovers it
    t = np.arange(1, 251) / FS
    m = single_bin_phase(np.cos(2 * np.pi * 9.3 * t - 1.0), 9.3, FS)
    assert m.phase_deg == pytest.approx(math.degrees(-1.0), abs=1e-8)


def test_single_bin_phase_errors():
    with pytest.raises(DataError, match="cycles"):
        single_bin_phase(np.ones(40), 6.0, FS)
    with pytest.raises(DataError):
        single_bin_phase(np.ones(1000), 125.0, FS)
    with pytest.raises(DataError, match="Nyquist"):
        single_bin_phase(np.ones(100), 122.0, FS)
