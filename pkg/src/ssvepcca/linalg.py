"""Symmetric-definite generalized eigenproblems with ridge regularization."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg as sla

from .errors import DataError, NumericalError

DEFAULT_RIDGE = 1e-8
SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class GevpProblem:
    """The pencil ``A w = rho (B + ridge I) w``.

    ``A`` must be symmetric and ``B`` symmetric positive semidefinite.
    Both are symmetrized on construction after a relative symmetry check.
    """

    A: np.ndarray
    B: np.ndarray
    ridge: float = DEFAULT_RIDGE

    def __post_init__(self):
        a = np.array(self.A, dtype=float)
        b = np.array(self.B, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
            raise DataError(f"A and B must be square and equal-sized, got {a.shape} and {b.shape}")
        for name, m in (("A", a), ("B", b)):
            scale = max(np.abs(m).max(), np.finfo(float).tiny)
            if np.abs(m - m.T).max() > SYMMETRY_RTOL * scale:
                raise DataError(f"{name} is not symmetric")
        if self.ridge < 0:
            raise DataError(f"ridge must be nonnegative, got {self.ridge}")
        object.__setattr__(self, "A", 0.5 * (a + a.T))
        object.__setattr__(self, "B", 0.5 * (b + b.T))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def regularized_b(self) -> np.ndarray:
        return self.B + self.ridge * np.eye(self.dim)


def canonical_sign(w: np.ndarray) -> np.ndarray:
    """Flip ``w`` so its largest-magnitude entry is positive."""
    return -w if w[np.argmax(np.abs(w))] < 0 else w


def _reduce(p: GevpProblem):
    try:
        chol = sla.cholesky(p.regularized_b(), lower=True)
    except np.linalg.LinAlgError:
        raise NumericalError("B is indefinite beyond ridge repair") from None
    # C = L^-1 A L^-T
    tmp = sla.solve_triangular(chol, p.A, lower=True)
    c = sla.solve_triangular(chol, tmp.T, lower=True)
    return chol, 0.5 * (c + c.T)


def solve_gevp(p: GevpProblem) -> Tuple[np.ndarray, np.ndarray]:
    """All eigenpairs, eigenvalues descending.

    Columns of the returned vectors are (B + ridge I)-orthonormal and sign
    canonicalized.
    """
    chol, c = _reduce(p)
    vals, vecs = np.linalg.eigh(c)
    order = np.argsort(vals)[::-1]
    w = sla.solve_triangular(chol.T, vecs[:, order], lower=False)
    for k in range(w.shape[1]):
        w[:, k] = canonical_sign(w[:, k])
    return vals[order], w


def solve_gevp_top(p: GevpProblem, norm: float = 1.0) -> Tuple[float, np.ndarray]:
    """Largest eigenvalue and its eigenvector.

    The eigenvector is scaled so that ``w.T (B + ridge I) w == norm`` and
    its largest-magnitude entry is positive.
    """
    if norm <= 0:
        raise DataError(f"norm must be positive, got {norm}")
    chol, c = _reduce(p)
    d = p.dim
    val, vec = sla.eigh(c, subset_by_index=[d - 1, d - 1])
    w = sla.solve_triangular(chol.T, vec[:, 0], lower=False)
    w = canonical_sign(w) * np.sqrt(norm)
    return float(val[0]), w


def gevp_residual(p: GevpProblem, rho: float, w: np.ndarray) -> float:
    """``||A w - rho (B + ridge I) w|| / (||A||_F ||w||)``."""
    r = p.A @ w - rho * (p.regularized_b() @ w)
    denom = np.linalg.norm(p.A, "fro") * np.linalg.norm(w)
    return float(np.linalg.norm(r) / denom) if denom > 0 else float(np.linalg.norm(r))
