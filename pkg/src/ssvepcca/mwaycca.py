"""Multiway CCA between a channels x time x trials tensor and sine-cosine references."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .cca import max_cca
from .data import TrialSet
from .errors import DataError, ShapeMismatchError
from .references import ReferenceSet, sincos_refs


@dataclass(frozen=True, eq=False)
class TrialTensor:
    """EEG tensor of shape (C, P, N)."""

    data: np.ndarray
    stim_freq_hz: float

    def __post_init__(self):
        x = np.array(self.data, dtype=float)
        if x.ndim != 3:
            raise ShapeMismatchError(f"shape mismatch: tensor must be 3-way, got {x.shape}")
        if x.shape[2] < 2:
            raise DataError(f"tensor needs N >= 2 trials, got {x.shape[2]}")
        if not np.all(np.isfinite(x)):
            raise DataError("tensor contains non-finite values")
        x.setflags(write=False)
        object.__setattr__(self, "data", x)

    @classmethod
    def from_trials(cls, ts: TrialSet) -> "TrialTensor":
        return cls(np.moveaxis(ts.stack(), 0, -1), ts.stim_freq_hz)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class MwaySolution:
    w1: np.ndarray
    w3: np.ndarray
    v: np.ndarray
    rho: float
    iterations: int
    converged: bool
    history: Tuple[float, ...] = field(default=())


def mode_project(t: TrialTensor, w, mode: int) -> np.ndarray:
    """Contract the tensor with ``w`` along mode 1 (channels) or 3 (trials).

    Mode 1 gives an (N, P) matrix whose row n is ``w' X_n``; mode 3 gives
    the (C, P) weighted sum over trials.
    """
    w = np.asarray(w, dtype=float).ravel()
    c, _, n = t.shape
    if mode == 1:
        if w.size != c:
            raise ShapeMismatchError(f"shape mismatch: mode-1 vector needs {c} entries, got {w.size}")
        return np.einsum("c,cpn->np", w, t.data)
    if mode == 3:
        if w.size != n:
            raise ShapeMismatchError(f"shape mismatch: mode-3 vector needs {n} entries, got {w.size}")
        return np.einsum("cpn,n->cp", t.data, w)
    raise DataError(f"mode must be 1 or 3, got {mode}")


def fit_mwaycca(t: TrialTensor, n_harmonics: int, fs: float, tol: float = 1e-6,
                max_iter: int = 200) -> Tuple[MwaySolution, ReferenceSet]:
    """Alternating CCA over the channel and trial modes.

    Starting from uniform trial weights, each iteration solves a CCA for
    (w1, v) with w3 fixed, then for (w3, v) with w1 fixed. Each half-step
    is an exact maximization, so the correlation never decreases. Stops
    when one full iteration changes it by less than ``tol``.
    """
    c, p, n = t.shape
    y = sincos_refs(t.stim_freq_hz, n_harmonics, p, fs).signals
    w3 = np.full(n, 1.0 / np.sqrt(n))
    w1 = v = None
    history: List[float] = []
    rho_prev = -np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        sol = max_cca(mode_project(t, w3, 3), y)
        w1, v = sol.wx, sol.wy
        history.append(sol.rho)
        sol = max_cca(mode_project(t, w1, 1), y)
        w3, v = sol.wx, sol.wy
        history.append(sol.rho)
        if abs(sol.rho - rho_prev) < tol:
            converged = True
            break
        rho_prev = sol.rho
    z = mode_project(t, w3, 3)
    z = w1 @ z
    z = z - z.mean()
    sd = np.sqrt(np.mean(z * z))
    if sd == 0:
        raise DataError("MwayCCA variate is identically zero")
    solution = MwaySolution(w1, w3, v, history[-1], it, converged, tuple(history))
    ref = ReferenceSet(t.stim_freq_hz, (z / sd)[np.newaxis, :], "mwaycca",
                       {"harmonics": int(n_harmonics), "n_trials": n,
                        "iterations": it, "converged": converged})
    return solution, ref
