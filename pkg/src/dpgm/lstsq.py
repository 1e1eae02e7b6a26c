"""Minimum-norm least squares by truncated SVD, with residual diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = ["LstsqResult", "solve_lstsq", "diagnostics", "DEFAULT_RCOND"]

DEFAULT_RCOND = 1e-12


@dataclass
class LstsqResult:
    coeffs: np.ndarray
    total_residual: float
    per_block_residual: dict = field(default_factory=dict)
    rank_estimate: int = 0
    condition_estimate: float = float("nan")
    rcond: float = DEFAULT_RCOND
    singular_values: np.ndarray | None = None

    def summary(self) -> dict:
        return {
            "total_residual": self.total_residual,
            "per_block_residual": dict(self.per_block_residual),
            "rank": self.rank_estimate,
            "condition": self.condition_estimate,
            "rcond": self.rcond,
            "sigma_max": float(self.singular_values[0]) if self.singular_values is not None and len(self.singular_values) else float("nan"),
        }


def solve_lstsq(matrix, rhs, rcond: float = DEFAULT_RCOND, provenance=None) -> LstsqResult:
    """Minimise ``||M x - b||_2``, returning the minimum-norm minimiser.

    Singular values below ``rcond * sigma_max`` are discarded.  ``provenance``
    (``[(label, start, stop), ...]``) splits the residual by block.
    """
    M = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"need a non-empty 2-d matrix, got shape {M.shape}")
    if b.shape != (M.shape[0],):
        raise ValueError(f"rhs has shape {b.shape}, matrix has {M.shape[0]} rows")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
        raise ValueError("matrix and rhs must be finite")
    if not 0 <= rcond < 1:
        raise ValueError(f"rcond must lie in [0, 1), got {rcond}")
    U, s, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    keep = s > rcond * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    r = int(np.count_nonzero(keep))
    x = Vt[:r].T @ ((U[:, :r].T @ b) / s[:r])
    res = LstsqResult(coeffs=x, total_residual=0.0, rank_estimate=r, rcond=rcond, singular_values=s)
    return diagnostics(M, res, b, provenance)


def diagnostics(matrix, result: LstsqResult, rhs, provenance=None) -> LstsqResult:
    """Fill residual norms, rank and condition estimates of ``result``."""
    M = np.asarray(matrix, dtype=float)
    resid = M @ result.coeffs - np.asarray(rhs, dtype=float)
    result.total_residual = float(np.linalg.norm(resid))
    if provenance:
        per = {}
        for label, start, stop in provenance:
            prev = per.get(label, 0.0)
            per[label] = float(np.hypot(prev, np.linalg.norm(resid[start:stop])))
        result.per_block_residual = per
    s = result.singular_values
    if s is None:
        s = scipy.linalg.svdvals(M, check_finite=False)
        result.singular_values = s
        result.rank_estimate = int(np.count_nonzero(s > result.rcond * s[0])) if s[0] > 0 else 0
    r = result.rank_estimate
    result.condition_estimate = float(s[0] / s[r - 1]) if r > 0 else float("inf")
    return result
