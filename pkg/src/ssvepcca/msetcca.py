"""Multiset CCA (MAXVAR) spatial filters and learned reference signals.

For N same-frequency trials X_1..X_N (each C x P), the stacked filter
w = [w_1; ...; w_N] maximizes the summed cross-trial covariance
sum_{i != j} w_i' X_i X_j' w_j subject to (1/N) sum_i w_i' X_i X_i' w_i = 1.
Its Lagrangian gives the pencil (R - S) w = rho S w, where R holds every
X_i X_j' block and S only the diagonal ones. The projected trials
z_i = w_i' X_i, stacked as rows, replace sine-cosine references.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .cca import ridge_for
from .data import TrialSet
from .errors import DataError, ShapeMismatchError
from .linalg import DEFAULT_RIDGE, GevpProblem, solve_gevp_top
from .references import ReferenceSet


@dataclass(frozen=True, eq=False)
class SpatialFilterBank:
    """Per-trial spatial filters learned for one stimulus frequency.

    ``eigenvalue`` is the achieved ratio w'(R - S)w / w'Sw, which lies in
    (-1, N - 1] and reaches N - 1 only when all variates coincide.
    """

    stim_freq_hz: float
    filters: Tuple[np.ndarray, ...]
    eigenvalue: float

    def __post_init__(self):
        filters = tuple(np.array(w, dtype=float).ravel() for w in self.filters)
        if len(filters) < 2:
            raise DataError(f"a filter bank needs N >= 2 filters, got {len(filters)}")
        if len({w.size for w in filters}) != 1:
            raise ShapeMismatchError("shape mismatch: filters differ in length")
        for w in filters:
            if not np.any(w):
                raise DataError("spatial filters must be nonzero")
            w.setflags(write=False)
        object.__setattr__(self, "filters", filters)

    @property
    def n_trials(self) -> int:
        return len(self.filters)

    @property
    def n_channels(self) -> int:
        return self.filters[0].size

    def as_matrix(self) -> np.ndarray:
        """Filters as an (N, C) array."""
        return np.vstack(self.filters)


def block_matrices(trials: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """R (all X_i X_j' blocks) and S (diagonal blocks) for an (N, C, P) stack."""
    n, c, p = trials.shape
    stacked = trials.reshape(n * c, p)
    r = stacked @ stacked.T
    s = np.zeros_like(r)
    for i in range(n):
        sl = slice(i * c, (i + 1) * c)
        s[sl, sl] = r[sl, sl]
    return r, s


def constraint_value(trials: np.ndarray, filters: np.ndarray) -> float:
    """(1/N) sum_i w_i' X_i X_i' w_i for (N, C, P) trials and (N, C) filters."""
    z = np.einsum("nc,ncp->np", filters, trials)
    return float(np.mean(np.sum(z * z, axis=1)))


def _variates(trials: np.ndarray, filters: np.ndarray, normalize: bool) -> np.ndarray:
    z = np.einsum("nc,ncp->np", filters, trials)
    if normalize:
        z = z - z.mean(axis=1, keepdims=True)
        sd = np.sqrt(np.mean(z * z, axis=1, keepdims=True))
        if np.any(sd == 0):
            raise DataError("a canonical variate is identically zero")
        z = z / sd
    return z


def fit_filters(trials: np.ndarray, ridge: float = DEFAULT_RIDGE):
    """Solve the MAXVAR pencil for an (N, C, P) stack.

    Returns
    -------
    filters : ndarray, shape (N, C)
        Scaled so that ``constraint_value(trials, filters) == 1``.
    achieved : float
        Rayleigh quotient w'(R - S)w / w'Sw.
    problem, pencil_rho, w_stacked
        The solved pencil, its eigenvalue and the unscaled stacked vector,
        for residual checks.
    """
    trials = np.asarray(trials, dtype=float)
    if trials.ndim != 3:
        raise ShapeMismatchError(f"shape mismatch: expected (N, C, P) trials, got {trials.shape}")
    n, c, _ = trials.shape
    if n < 2:
        raise DataError(f"MsetCCA needs N >= 2 trials, got {n}")
    r, s = block_matrices(trials)
    problem = GevpProblem(r - s, s, ridge=ridge_for(s, ridge))
    pencil_rho, w = solve_gevp_top(problem)
    sw = float(w @ s @ w)
    if not sw > 0:
        raise DataError("degenerate trial covariance: variates carry no variance")
    achieved = float(w @ (r - s) @ w) / sw
    scaled = (w * np.sqrt(n / sw)).reshape(n, c)
    return scaled, achieved, problem, pencil_rho, w


def fit_msetcca(ts: TrialSet, ridge: float = DEFAULT_RIDGE,
                normalize_variates: bool = True) -> Tuple[SpatialFilterBank, ReferenceSet]:
    """Learn joint spatial filters over a trial set and its reference signals.

    Trials are expected to be standardized per channel already.
    ``normalize_variates=False`` stacks the raw projections instead of
    unit-variance ones; recognition scores are identical either way.
    """
    trials = ts.stack()
    filters, achieved, *_ = fit_filters(trials, ridge)
    bank = SpatialFilterBank(ts.stim_freq_hz, tuple(filters), achieved)
    return bank, msetcca_reference(bank, ts, normalize_variates=normalize_variates)


def msetcca_reference(bank: SpatialFilterBank, ts: TrialSet,
                      normalize_variates: bool = True) -> ReferenceSet:
    """Stack ``w_i' X_i`` as an N x P reference block."""
    if len(ts) != bank.n_trials:
        raise ShapeMismatchError(
            f"shape mismatch: bank has {bank.n_trials} filters, trial set has {len(ts)} trials")
    trials = ts.stack()
    if trials.shape[1] != bank.n_channels:
        raise ShapeMismatchError(
            f"shape mismatch: filters have {bank.n_channels} channels, trials have {trials.shape[1]}")
    z = _variates(trials, bank.as_matrix(), normalize_variates)
    return ReferenceSet(ts.stim_freq_hz, z, "msetcca",
                        {"n_trials": bank.n_trials, "eigenvalue": bank.eigenvalue,
                         "normalized": bool(normalize_variates)})


def objective(trials: np.ndarray, filters: np.ndarray) -> float:
    """sum_{i != j} w_i' X_i X_j' w_j."""
    z = np.einsum("nc,ncp->np", filters, trials)
    total = z.sum(axis=0)
    return float(total @ total - np.sum(z * z))


def variate_correlations(ref: ReferenceSet) -> np.ndarray:
    return np.corrcoef(ref.signals)
