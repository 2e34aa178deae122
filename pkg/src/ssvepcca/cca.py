"""Pairwise canonical correlation analysis (top canonical pair only)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import DataError, NumericalError
from .linalg import DEFAULT_RIDGE, GevpProblem, solve_gevp_top


@dataclass(frozen=True, eq=False)
class CcaSolution:
    """Maximal canonical correlation and the weights that attain it."""

    rho: float
    wx: np.ndarray
    wy: np.ndarray


def _center(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[np.newaxis, :]
    if a.ndim != 2:
        raise DataError(f"{name} must be a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains non-finite values")
    a = a - a.mean(axis=1, keepdims=True)
    if not np.any(np.abs(a) > 0):
        raise DataError(f"{name} has only constant rows")
    return a


def ridge_for(cov: np.ndarray, ridge: float) -> float:
    """Ridge scaled to the average variance so that it is unit-free."""
    return ridge * float(np.trace(cov)) / cov.shape[0]


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    return float(np.dot(a, b) / den) if den > 0 else 0.0


def _solve(x: np.ndarray, y: np.ndarray, ridge: float):
    n = x.shape[1]
    cxx = x @ x.T / n
    cyy = y @ y.T / n
    cxy = x @ y.T / n
    cyy_r = cyy + ridge_for(cyy, ridge) * np.eye(cyy.shape[0])
    try:
        cyy_cho = sla.cho_factor(cyy_r, lower=True)
    except np.linalg.LinAlgError:
        raise NumericalError("Y covariance is indefinite beyond ridge repair") from None
    # wx solves Cxy Cyy^-1 Cyx wx = rho^2 Cxx wx
    proj = sla.cho_solve(cyy_cho, cxy.T)
    pencil = GevpProblem(cxy @ proj, cxx, ridge=ridge_for(cxx, ridge))
    _, wx = solve_gevp_top(pencil)
    wy = proj @ wx
    if not np.any(wy):
        # no shared direction at all; any unit wy is optimal
        wy = np.zeros(y.shape[0])
        wy[0] = 1.0
    return wx, wy


def max_cca(X, Y, ridge: float = DEFAULT_RIDGE) -> CcaSolution:
    """Largest canonical correlation between the rows of ``X`` and ``Y``.

    Parameters
    ----------
    X : ndarray, shape (I1, J)
    Y : ndarray, shape (I2, J)
        Both matrices are centered row-wise before solving.
    ridge : float
        Relative diagonal loading of each covariance block.

    Returns
    -------
    CcaSolution
        ``rho`` is the correlation of the variates ``wx.T X`` and
        ``wy.T Y``, clamped to [0, 1].
    """
    x = _center(X, "X")
    y = _center(Y, "Y")
    if x.shape[1] != y.shape[1]:
        raise DataError(f"X and Y need the same number of columns, got {x.shape[1]} and {y.shape[1]}")
    if x.shape[1] < 2:
        raise DataError("CCA needs at least 2 observations")
    # the eigenproblem is sized by the smaller block
    x_side = x.shape[0] <= y.shape[0]
    if x_side:
        wx, wy = _solve(x, y, ridge)
    else:
        wy, wx = _solve(y, x, ridge)
    rho = _corr(wx @ x, wy @ y)
    if rho < 0:
        # keep the eigen-solved side canonical, flip the derived side
        if x_side:
            wy = -wy
        else:
            wx = -wx
        rho = -rho
    return CcaSolution(min(max(rho, 0.0), 1.0), wx, wy)
