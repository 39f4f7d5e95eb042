"""
Joint truncated-SVD compression of a planned group.

A group of k blocks (m x n) is stored as one shared orthonormal basis U_r
(m x r) taken from the concatenation, plus per-block coefficients
C_i = U_r^T A_i (r x n). StorageStats compares that against truncating every
block separately.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from config import config
from includes.errors import (
    EmptyBlockList,
    IndexOutOfRange,
    InvalidArgument,
    PlanMismatch,
    RankTooLarge,
    ShapeMismatch,
)
from includes.matrix import DenseMatrix, as_matrix, concat_h, spectral_norm, svd

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompressedGroup:
    basis: DenseMatrix
    coefficients: tuple[DenseMatrix, ...]
    rank: int
    original_shape: tuple[int, int, int]  # (m, n, k)

    def __post_init__(self):
        m, n, k = self.original_shape
        if self.rank < 1 or min(m, n, k) < 1:
            raise InvalidArgument(f"rank and shape must be positive, got rank {self.rank}, shape {self.original_shape}")
        if self.basis.shape != (m, self.rank):
            raise InvalidArgument(f"basis has shape {self.basis.shape}, expected {(m, self.rank)}")
        if len(self.coefficients) != k or any(c.shape != (self.rank, n) for c in self.coefficients):
            raise InvalidArgument(f"expected {k} coefficient blocks of shape {(self.rank, n)}")
        drift = np.max(np.abs(self.basis.T @ self.basis - np.eye(self.rank)), initial=0.0)
        if drift > config.ORTHONORMALITY_TOL:
            raise InvalidArgument(f"basis columns are not orthonormal (max deviation {drift:.2e})")

    @property
    def k(self) -> int:
        return self.original_shape[2]


@dataclass(frozen=True)
class StorageStats:
    """Scalar counts for joint vs per-block truncated storage.

    joint:    r*m + k*r*n       (shared basis + coefficients)
    separate: sum_i r_i*(m+n+1) (U, V and sigma of each block's truncation)
    """

    joint_scalars: int
    separate_scalars: int
    ratio: float

    def to_dict(self) -> dict:
        return {
            "joint_scalars": self.joint_scalars,
            "separate_scalars": self.separate_scalars,
            "ratio": self.ratio,
        }


@dataclass(frozen=True)
class ReconstructionErrors:
    per_block: tuple[float, ...]
    concatenated: float

    def to_dict(self) -> dict:
        return {"per_block": list(self.per_block), "concatenated": self.concatenated}


def normalize_signs(basis: NDArray[np.float64]) -> NDArray[np.float64]:
    """Flip columns so each column's largest-magnitude entry is positive."""
    out = np.array(basis, dtype=np.float64, copy=True)
    pivots = np.argmax(np.abs(out), axis=0)
    signs = np.sign(out[pivots, np.arange(out.shape[1])])
    signs[signs == 0] = 1.0
    return out * signs


def _same_shape(blocks: Sequence[ArrayLike]) -> list[DenseMatrix]:
    if len(blocks) == 0:
        raise EmptyBlockList("cannot compress an empty group")
    mats = [as_matrix(b) for b in blocks]
    for i, b in enumerate(mats[1:], start=1):
        if b.shape != mats[0].shape:
            raise ShapeMismatch(i, mats[0].shape, b.shape)
    return mats


def compress_group(blocks: Sequence[ArrayLike], r: int) -> CompressedGroup:
    mats = _same_shape(blocks)
    m, n = mats[0].shape
    k = len(mats)
    limit = min(m, k * n)
    if r < 1 or r > limit:
        raise RankTooLarge(f"rank {r} outside 1..{limit} for {k} blocks of shape {(m, n)}")

    factors = svd(concat_h(mats))
    basis = normalize_signs(factors.left_vectors[:, :r])
    basis.setflags(write=False)
    coefficients = []
    for b in mats:
        c = basis.T @ b
        c.setflags(write=False)
        coefficients.append(c)
    logger.debug(f"Compressed {k} blocks of {(m, n)} at rank {r}")
    return CompressedGroup(
        basis=basis,
        coefficients=tuple(coefficients),
        rank=r,
        original_shape=(m, n, k),
    )


def reconstruct_block(group: CompressedGroup, i: int) -> DenseMatrix:
    if not 0 <= i < group.k:
        raise IndexOutOfRange(f"block index {i} outside 0..{group.k - 1}")
    return as_matrix(group.basis @ group.coefficients[i])


def group_reconstruction_error(group: CompressedGroup, blocks: Sequence[ArrayLike]) -> ReconstructionErrors:
    """Per-block ||A_i - U_r C_i||_2 and the concatenated ||M - U_r U_r^T M||_2.

    The concatenated error equals sigma_{r+1}(M) (0 when r is the full rank).
    """
    mats = [as_matrix(b) for b in blocks]
    m, n, k = group.original_shape
    if len(mats) != k or any(b.shape != (m, n) for b in mats):
        raise PlanMismatch(f"group was compressed from {k} blocks of {(m, n)}")

    per_block = tuple(
        spectral_norm(b - reconstruct_block(group, i)) for i, b in enumerate(mats)
    )
    full = concat_h(mats)
    residual = full - group.basis @ (group.basis.T @ full)
    return ReconstructionErrors(per_block=per_block, concatenated=spectral_norm(residual))


def storage_accounting(
    m: int,
    n: int,
    k: int,
    r_joint: int,
    per_block_ranks: Sequence[int] | None = None,
) -> StorageStats:
    if min(m, n, k) < 1:
        raise InvalidArgument(f"dimensions must be positive, got m={m}, n={n}, k={k}")
    limit = min(m, k * n)
    if r_joint < 1 or r_joint > limit:
        raise RankTooLarge(f"joint rank {r_joint} outside 1..{limit}")
    if per_block_ranks is None:
        per_block_ranks = [r_joint] * k
    if len(per_block_ranks) != k:
        raise InvalidArgument(f"expected {k} per-block ranks, got {len(per_block_ranks)}")

    joint = r_joint * m + k * r_joint * n
    separate = sum(int(r) * (m + n + 1) for r in per_block_ranks)
    if separate < 1:
        raise InvalidArgument("per-block ranks must not all be zero")
    return StorageStats(joint_scalars=joint, separate_scalars=separate, ratio=joint / separate)
