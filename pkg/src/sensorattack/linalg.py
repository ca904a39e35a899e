"""SVD-based rank, kernel and annihilator primitives.

Every rank decision in the package goes through :func:`numerical_rank`, so the
kernel bases and annihilators returned here are consistent with the ranks
reported by the detectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DataQualityError

__all__ = [
    "RankTolerance",
    "DEFAULT_RANK_TOL",
    "KernelBasis",
    "singular_values",
    "numerical_rank",
    "left_kernel_basis",
    "left_annihilator_of_columns",
]


@dataclass(frozen=True)
class RankTolerance:
    """Singular-value cutoff used to decide numerical rank.

    ``mode="relative"`` counts singular values above ``value * sigma_max``;
    ``mode="absolute"`` counts those above ``value``.
    """

    mode: Literal["absolute", "relative"] = "relative"
    value: float = 1e-10

    def __post_init__(self):
        if self.mode not in ("absolute", "relative"):
            raise ValueError(f"unknown rank tolerance mode {self.mode!r}")
        if not np.isfinite(self.value) or self.value < 0:
            raise ValueError("rank tolerance must be a finite non-negative number")
        if self.mode == "relative" and self.value >= 1:
            raise ValueError("relative rank tolerance must be < 1")

    def cutoff(self, sigma_max: float) -> float:
        if self.mode == "absolute":
            return self.value
        return self.value * sigma_max

    def as_dict(self) -> dict:
        return {"mode": self.mode, "value": self.value}


DEFAULT_RANK_TOL = RankTolerance("relative", 1e-10)


@dataclass(frozen=True)
class KernelBasis:
    """Orthonormal basis of the left null space of a matrix.

    ``rows`` has shape ``(ambient_dim - rank_estimate, ambient_dim)``.
    """

    rows: np.ndarray
    ambient_dim: int
    rank_estimate: int

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]


def _checked(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DataQualityError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(M))[0])
        raise DataQualityError(f"non-finite entry at position {bad}")
    return M


def _rank_from_sv(s: np.ndarray, tol: RankTolerance) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.cutoff(s[0])))


def singular_values(M) -> np.ndarray:
    """Singular values of ``M`` in descending order (finite input enforced)."""
    M = _checked(M)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def numerical_rank(M, tol: RankTolerance = DEFAULT_RANK_TOL) -> int:
    """Number of singular values of ``M`` above the cutoff defined by ``tol``.

    >>> numerical_rank([[1.0, 2.0], [2.0, 4.0]])
    1
    """
    M = _checked(M)
    if M.size == 0:
        raise DataQualityError("rank of an empty matrix is undefined")
    return _rank_from_sv(np.linalg.svd(M, compute_uv=False), tol)


def _left_null(M: np.ndarray, tol: RankTolerance) -> tuple[np.ndarray, int]:
    rows, cols = M.shape
    if cols == 0:
        return np.eye(rows), 0
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    r = _rank_from_sv(s, tol)
    return U[:, r:].T.copy(), r


def left_kernel_basis(M, tol: RankTolerance = DEFAULT_RANK_TOL) -> KernelBasis:
    """Orthonormal rows spanning ``{v : v^T M = 0}``, taken from the SVD of ``M``."""
    M = _checked(M)
    if M.size == 0:
        raise DataQualityError("kernel of an empty matrix is undefined")
    rows, r = _left_null(M, tol)
    return KernelBasis(rows=rows, ambient_dim=M.shape[0], rank_estimate=r)


def left_annihilator_of_columns(M, tol: RankTolerance = DEFAULT_RANK_TOL) -> np.ndarray:
    """Matrix ``P`` with orthonormal rows such that ``P @ M ~ 0``.

    Unlike :func:`left_kernel_basis` this accepts matrices with zero columns
    (the annihilator is then the identity) and zero rows (``P`` is ``0 x 0``).
    """
    M = _checked(M)
    if M.shape[0] == 0:
        return np.zeros((0, 0))
    return _left_null(M, tol)[0]
