import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssvepcca.cca import max_cca
from ssvepcca.errors import DataError

from oracles import grid_cca_rho, svd_cca_rho


def pair(seed, i1=3, i2=4, n=200, coupling=0.5):
    rng = np.random.default_rng(seed)
    s = rng.standard_normal(n)
    x = rng.standard_normal((i1, n)) + coupling * s
    y = rng.standard_normal((i2, n)) + coupling * s
    return x, y


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), i1=st.integers(1, 6), i2=st.integers(1, 6))
def test_matches_svd_oracle(seed, i1, i2):
    x, y = pair(seed, i1, i2)
    assert max_cca(x, y).rho == pytest.approx(svd_cca_rho(x, y), abs=1e-7)


def test_matches_grid_oracle():
    x, y = pair(5, 2, 2)
    assert max_cca(x, y).rho == pytest.approx(grid_cca_rho(x, y), abs=1e-6)


def test_weights_attain_rho():
    x, y = pair(1)
    sol = max_cca(x, y)
    u = sol.wx @ (x - x.mean(1, keepdims=True))
    v = sol.wy @ (y - y.mean(1, keepdims=True))
    assert np.corrcoef(u, v)[0, 1] == pytest.approx(sol.rho, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_invariance_to_invertible_transforms(seed):
    x, y = pair(seed)
    rng = np.random.default_rng(seed + 1)
    a = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    b = rng.standard_normal((4, 4)) + 3 * np.eye(4)
    base = max_cca(x, y).rho
    assert max_cca(a @ x + 5.0, b @ y).rho == pytest.approx(base, abs=1e-8)
    assert max_cca(y, x).rho == pytest.approx(base, abs=1e-12)


def test_degenerate_cases():
    x, _ = pair(2)
    assert max_cca(x, x).rho == pytest.approx(1.0, abs=1e-10)
    # duplicated rows add no new directions
    _, y = pair(3)
    assert max_cca(x, np.vstack([y, y[:1]])).rho == pytest.approx(max_cca(x, y).rho, abs=1e-6)
    rng = np.random.default_rng(0)
    rho = max_cca(rng.standard_normal((1, 5000)), rng.standard_normal((1, 5000))).rho
    assert 0.0 <= rho < 0.05


def test_input_errors():
    with pytest.raises(DataError, match="same number of columns"):
        max_cca(np.ones((2, 10)) + np.arange(10), np.arange(11.0)[None])
    with pytest.raises(DataError, match="constant"):
        max_cca(np.ones((2, 10)), np.arange(10.0)[None])
    bad = np.arange(10.0)[None].copy()
    bad[0, 3] = np.nan
    with pytest.raises(DataError, match="non-finite"):
        max_cca(bad, np.arange(10.0)[None])
