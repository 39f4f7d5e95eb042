"""
Dense real matrices and the spectral operations every other module consumes.

A DenseMatrix is a read-only float64 2-D numpy array. The SVD is delegated to
LAPACK through numpy.linalg.svd, and the spectral norm is always its first
singular value. Power iteration is available separately as an estimator.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from config import config
from includes.errors import (
    ConvergenceFailure,
    EmptyBlockList,
    InvalidArgument,
    ShapeMismatch,
    UnsortedSpectrum,
    ZeroK,
)

logger = logging.getLogger(__name__)

DenseMatrix = NDArray[np.float64]

EPS = np.finfo(np.float64).eps


def as_matrix(data: ArrayLike) -> DenseMatrix:
    """Validate and freeze array-like data as a DenseMatrix.

    Raises:
        InvalidArgument: if the data is not 2-D, has an empty dimension, or
                         contains NaN/Inf.
    """
    a = np.array(data, dtype=np.float64, copy=True)
    if a.ndim != 2:
        raise InvalidArgument(f"matrix must be 2-D, got {a.ndim}-D")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidArgument(f"matrix dimensions must be positive, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument("matrix entries must be finite (NaN/Inf found)")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD A = U diag(s) V^T with p = min(m, n) columns."""

    left_vectors: DenseMatrix
    singular_values: NDArray[np.float64]
    right_vectors: DenseMatrix

    def reconstruct(self) -> DenseMatrix:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def concat_h(blocks: Sequence[ArrayLike]) -> DenseMatrix:
    """Horizontally concatenate equal-row-count blocks, preserving order."""
    if len(blocks) == 0:
        raise EmptyBlockList("cannot concatenate an empty block list")
    mats = [as_matrix(b) for b in blocks]
    rows = mats[0].shape[0]
    for i, b in enumerate(mats[1:], start=1):
        if b.shape[0] != rows:
            raise ShapeMismatch(i, (rows, "*"), b.shape)
    return as_matrix(np.hstack(mats))


def svd(a: ArrayLike) -> SvdFactors:
    """Thin SVD with singular values sorted nonincreasing."""
    a = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"SVD did not converge for {a.shape} input: {e}") from e
    for arr in (u, s, vt):
        arr.setflags(write=False)
    return SvdFactors(left_vectors=u, singular_values=s, right_vectors=vt.T)


def singular_values(a: ArrayLike) -> NDArray[np.float64]:
    # same LAPACK path as svd() so both agree bit for bit
    return svd(a).singular_values


def gram_eigenvalues(a: ArrayLike) -> NDArray[np.float64]:
    """Nonincreasing eigenvalues of A^T A (equivalently A A^T), as sigma_i^2."""
    return singular_values(a) ** 2


def power_iteration_norm(
    a: ArrayLike,
    tol: float | None = None,
    max_iter: int | None = None,
) -> float:
    """Dominant singular value reachable from the all-ones start vector.

    Iterates on the smaller Gram side and stops once the Rayleigh residual
    ||G v - sigma^2 v|| is at most tol * sigma^2. The result never exceeds
    sigma_1, and equals a smaller singular value when the start vector has no
    component along the top right singular vector. spectral_norm does not
    use it.
    """
    a = as_matrix(a)
    tol = config.POWER_ITERATION_TOL if tol is None else tol
    max_iter = config.POWER_ITERATION_MAX_ITER if max_iter is None else max_iter

    # iterate on the side whose vectors are shorter
    op = a if a.shape[1] <= a.shape[0] else a.T
    if not np.any(op):
        return 0.0

    v = np.ones(op.shape[1]) / np.sqrt(op.shape[1])
    for _ in range(max_iter):
        w = op @ v
        sigma_sq = float(w @ w)
        if sigma_sq == 0.0:
            # start vector in the null space
            logger.warning("Power iteration start vector annihilated; falling back to SVD")
            return float(singular_values(a)[0])
        z = op.T @ w
        if np.linalg.norm(z - sigma_sq * v) <= tol * sigma_sq:
            return float(np.sqrt(sigma_sq))
        v = z / np.linalg.norm(z)
    raise ConvergenceFailure("power iteration did not reach tolerance", iterations=max_iter)


def spectral_norm(a: ArrayLike) -> float:
    """sigma_1 from the full SVD; every bound input goes through here."""
    return float(singular_values(a)[0])


def numerical_rank(
    sv: ArrayLike,
    rows: int,
    cols: int,
    rel_tol: float | None = None,
) -> int:
    """Count singular values above rel_tol * sigma_1.

    The default tolerance is max(rows, cols) * machine epsilon, unless
    RANK_REL_TOL is configured.
    """
    s = np.asarray(sv, dtype=np.float64)
    if s.size == 0:
        return 0
    if np.any(s < 0) or np.any(np.diff(s) > 0):
        raise UnsortedSpectrum("singular values must be nonnegative and nonincreasing")
    if rel_tol is None:
        rel_tol = config.get_rank_rel_tol()
    if rel_tol is None:
        rel_tol = max(rows, cols) * EPS
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def replicated_spectrum(sv_of_a: ArrayLike, k: int) -> NDArray[np.float64]:
    """Singular values of k horizontal copies of A: each sigma scaled by sqrt(k).

    Zero-padding up to the concatenated shape is left to the caller.
    """
    if k < 1:
        raise ZeroK(f"copy count must be >= 1, got {k}")
    s = np.asarray(sv_of_a, dtype=np.float64)
    if np.any(s < 0) or np.any(np.diff(s) > 0):
        raise UnsortedSpectrum("singular values must be nonnegative and nonincreasing")
    return np.sqrt(k) * s
