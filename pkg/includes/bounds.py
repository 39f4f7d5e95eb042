"""
Closed-form singular value perturbation bounds for concatenated matrices.

Every bound here is pure arithmetic over norm summaries (a_j = ||A_j||_2,
e_j = ||E_j||_2) and, where needed, the unperturbed spectrum. No function in
this module touches a raw block except BlockNorms.from_blocks.

Decisions default to the left-Gram (M M^T) value; the right-Gram (M^T M)
value is computed alongside for comparison and is never smaller.
"""

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from includes.errors import (
    InvalidArgument,
    LengthMismatch,
    NonSquareGrid,
    NonpositiveSigma,
    NonpositiveTau,
    ZeroSigmaAtRank,
)
from includes.matrix import spectral_norm


def _check_norms(values: Sequence[float], what: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v) or v < 0:
            raise InvalidArgument(f"{what} must be finite and nonnegative, got {v}")
    return out


@dataclass(frozen=True)
class BlockNorms:
    """Spectral norms of the blocks A_j and of their perturbations E_j."""

    base_norms: tuple[float, ...]
    pert_norms: tuple[float, ...]

    def __post_init__(self):
        base = _check_norms(self.base_norms, "base_norms")
        pert = _check_norms(self.pert_norms, "pert_norms")
        if len(base) == 0:
            raise InvalidArgument("BlockNorms needs at least one block")
        if len(base) != len(pert):
            raise LengthMismatch(
                f"base_norms has {len(base)} entries, pert_norms has {len(pert)}"
            )
        object.__setattr__(self, "base_norms", base)
        object.__setattr__(self, "pert_norms", pert)

    @property
    def k(self) -> int:
        return len(self.base_norms)

    @classmethod
    def from_blocks(cls, blocks: Sequence[ArrayLike], perturbations: Sequence[ArrayLike]) -> "BlockNorms":
        if len(blocks) != len(perturbations):
            raise LengthMismatch(
                f"{len(blocks)} blocks but {len(perturbations)} perturbations"
            )
        return cls(
            base_norms=tuple(spectral_norm(b) for b in blocks),
            pert_norms=tuple(spectral_norm(e) for e in perturbations),
        )


@dataclass(frozen=True)
class GroupBoundReport:
    """All bound values for one block collection.

    gram_right / gram_left are in sigma^2 units, the index bounds in sigma units.
    """

    k: int
    gram_right: float
    gram_left: float
    nonzero_index_bounds: tuple[float, ...]
    zero_index_bound: float
    rank_used: int
    reference_spectrum: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "gram_right": self.gram_right,
            "gram_left": self.gram_left,
            "nonzero_index_bounds": list(self.nonzero_index_bounds),
            "zero_index_bound": self.zero_index_bound,
            "rank_used": self.rank_used,
            "reference_spectrum": list(self.reference_spectrum),
        }


def block_norm_bound(block_norm_grid: ArrayLike) -> float:
    """Upper bound on ||E||_2 of a k x k block matrix from its block norms."""
    grid = np.asarray(block_norm_grid, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1] or grid.shape[0] == 0:
        raise NonSquareGrid(f"block norm grid must be square, got shape {grid.shape}")
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise InvalidArgument("block norms must be finite and nonnegative")
    return float(np.sqrt(np.sum(grid ** 2)))


def gram_right_bound(norms: BlockNorms) -> float:
    """Bound on ||M~^T M~ - M^T M||_2: sqrt(sum_ij (a_i e_j + e_i a_j + e_i e_j)^2)."""
    a = np.asarray(norms.base_norms)
    e = np.asarray(norms.pert_norms)
    d = np.outer(a, e) + np.outer(e, a) + np.outer(e, e)
    return float(np.sqrt(np.sum(d ** 2)))


def gram_left_bound(norms: BlockNorms) -> float:
    """Bound on ||M~ M~^T - M M^T||_2: sum_i (2 a_i e_i + e_i^2)."""
    a = np.asarray(norms.base_norms)
    e = np.asarray(norms.pert_norms)
    return float(np.sum(2.0 * a * e + e ** 2))


def _check_rank(sv: np.ndarray, rank: int) -> None:
    if rank < 0 or rank > sv.size:
        raise InvalidArgument(f"rank {rank} outside 0..{sv.size}")
    if rank > 0 and not sv[rank - 1] > 0:
        raise ZeroSigmaAtRank(
            f"sigma_{rank} = {sv[rank - 1]} is zero, contradicting declared rank {rank}"
        )


def sv_deviation_bounds(norms: BlockNorms, sv_of_m: ArrayLike, rank: int) -> GroupBoundReport:
    """Per-index bounds on |sigma_i(M~) - sigma_i(M)|.

    For i <= rank the bound is gram_left / sigma_i(M); beyond the rank,
    sigma_i(M~) <= sqrt(gram_left).
    """
    sv = np.asarray(sv_of_m, dtype=np.float64)
    _check_rank(sv, rank)
    left = gram_left_bound(norms)
    right = gram_right_bound(norms)
    return GroupBoundReport(
        k=norms.k,
        gram_right=right,
        gram_left=left,
        nonzero_index_bounds=tuple(float(left / s) for s in sv[:rank]),
        zero_index_bound=math.sqrt(left),
        rank_used=rank,
        reference_spectrum=tuple(float(s) for s in sv),
    )


def centroid_bounds(
    base_norm: float,
    sv_of_a: ArrayLike,
    rank: int,
    pert_norms: Sequence[float],
    k: int,
) -> GroupBoundReport:
    """Bounds for [A, A+E_2, ..., A+E_k] around k copies of A.

    The reference spectrum is sqrt(k) * sigma_i(A).
    """
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    if len(pert_norms) != k - 1:
        raise LengthMismatch(f"expected {k - 1} perturbation norms for k={k}, got {len(pert_norms)}")
    sv = np.asarray(sv_of_a, dtype=np.float64)
    _check_rank(sv, rank)

    norms = BlockNorms(base_norms=(base_norm,) * k, pert_norms=(0.0, *pert_norms))
    total = gram_left_bound(norms)
    root_k = math.sqrt(k)
    return GroupBoundReport(
        k=k,
        gram_right=gram_right_bound(norms),
        gram_left=total,
        nonzero_index_bounds=tuple(float(total / (root_k * s)) for s in sv[:rank]),
        zero_index_bound=math.sqrt(total),
        rank_used=rank,
        reference_spectrum=tuple(float(root_k * s) for s in sv),
    )


def continuity_envelope(base_norm: float, sigma_i_of_a: float, k: int, eps: float) -> tuple[float, float]:
    """Envelopes when every ||E_j||_2 <= eps.

    Returns (nonzero_envelope, zero_envelope); both vanish as eps -> 0.
    """
    if k < 2:
        raise InvalidArgument(f"continuity envelope needs k >= 2, got {k}")
    if not eps > 0:
        raise InvalidArgument(f"eps must be positive, got {eps}")
    if not sigma_i_of_a > 0:
        raise NonpositiveSigma(f"sigma_i(A) must be positive, got {sigma_i_of_a}")
    spread = (k - 1) * eps * (2.0 * base_norm + eps)
    return spread / (math.sqrt(k) * sigma_i_of_a), math.sqrt(spread)


def kmax(tau: float, sigma_r_of_a: float, base_norm: float, eps_bar: float) -> int | float:
    """Largest group size guaranteed to respect the (r, tau) budget.

    Returns math.inf when eps_bar is 0 (no perturbation ever violates it).
    """
    if not tau > 0:
        raise NonpositiveTau(f"tau must be positive, got {tau}")
    if not sigma_r_of_a > 0:
        raise NonpositiveSigma(f"sigma_r must be positive, got {sigma_r_of_a}")
    if eps_bar < 0:
        raise InvalidArgument(f"eps_bar must be nonnegative, got {eps_bar}")
    if eps_bar == 0:
        return math.inf
    denom = 2.0 * base_norm * eps_bar + eps_bar ** 2
    return max(0, math.floor((tau * sigma_r_of_a / denom) ** 2))


def group_bound(k: int, eps_bar: float, base_norm: float, sigma_r: float) -> float:
    """sqrt(k) (2 ||A_0|| eps_bar + eps_bar^2) / sigma_r: the group-size rule's bound."""
    return math.sqrt(k) * (2.0 * base_norm * eps_bar + eps_bar ** 2) / sigma_r


def tight_group_bound(k: int, eps_bar: float, base_norm: float, sigma_r: float) -> float:
    """(k - 1) (2 ||A_0|| eps_bar + eps_bar^2) / (sqrt(k) sigma_r)."""
    return (k - 1) * (2.0 * base_norm * eps_bar + eps_bar ** 2) / (math.sqrt(k) * sigma_r)


def weyl_gap(sv_a: ArrayLike, sv_b: ArrayLike, count: int | None = None) -> float:
    """max_i |sigma_i(A) - sigma_i(B)| over the first `count` aligned indices."""
    a = np.asarray(sv_a, dtype=np.float64)
    b = np.asarray(sv_b, dtype=np.float64)
    n = min(a.size, b.size) if count is None else count
    if n > min(a.size, b.size):
        raise LengthMismatch(f"cannot compare {n} indices of spectra sized {a.size} and {b.size}")
    if n == 0:
        return 0.0
    return float(np.max(np.abs(a[:n] - b[:n])))
