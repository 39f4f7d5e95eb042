"""
Greedy stream segmentation under an (r, tau) spectral budget.

Blocks are scanned left to right. The first unassigned block opens a group and
becomes its reference A_0; every following block is treated as A_0 + E_j and
admitted while the group-size rule still certifies the top-r singular values
of the concatenation to within tau of sqrt(k) * sigma_i(A_0). The first
violation closes the group and the violating block opens the next one.

Usage:
    plan = plan_groups(blocks, SpectralBudget(target_rank=2, tolerance=0.1))
    deviations = certify_plan(plan, blocks)
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

from numpy.typing import ArrayLike

from config import config
from includes import bounds
from includes.errors import (
    EmptyBlockList,
    InvalidArgument,
    NonpositiveSigma,
    PlanMismatch,
    ShapeMismatch,
)
from includes.matrix import (
    as_matrix,
    concat_h,
    numerical_rank,
    replicated_spectrum,
    singular_values,
    spectral_norm,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralBudget:
    """Top `target_rank` singular values may move by at most `tolerance` (absolute)."""

    target_rank: int
    tolerance: float

    def __post_init__(self):
        if self.target_rank < 1:
            raise InvalidArgument(f"target rank must be >= 1, got {self.target_rank}")
        if not (self.tolerance > 0 and math.isfinite(self.tolerance)):
            raise InvalidArgument(f"tolerance must be positive and finite, got {self.tolerance}")


@dataclass(frozen=True)
class GroupSpec:
    """One contiguous group of the plan.

    certified_bound is None for uncertified (rank-deficient reference) groups.
    """

    member_indices: tuple[int, ...]
    reference_index: int
    eps_bar: float
    certified_bound: float | None
    base_norm: float
    sigma_r: float
    certified: bool = True

    @property
    def k(self) -> int:
        return len(self.member_indices)

    def to_dict(self) -> dict:
        return {
            "members": list(self.member_indices),
            "reference_index": self.reference_index,
            "k": self.k,
            "eps_bar": self.eps_bar,
            "certified_bound": self.certified_bound,
            "base_norm": self.base_norm,
            "sigma_r": self.sigma_r,
            "certified": self.certified,
        }


@dataclass(frozen=True)
class GroupingPlan:
    groups: tuple[GroupSpec, ...]
    budget: SpectralBudget
    total_blocks: int
    sqrt_k: bool = True

    def kmax_hint(self, group: GroupSpec) -> int | float | None:
        """kmax at the group's closing eps_bar (None for uncertified groups)."""
        if not group.certified:
            return None
        return bounds.kmax(self.budget.tolerance, group.sigma_r, group.base_norm, group.eps_bar)


def _bound(k: int, eps_bar: float, base_norm: float, sigma_r: float, sqrt_k: bool) -> float:
    if sqrt_k:
        return bounds.group_bound(k, eps_bar, base_norm, sigma_r)
    return bounds.tight_group_bound(k, eps_bar, base_norm, sigma_r)


def group_feasible(
    k: int,
    eps_bar: float,
    base_norm: float,
    sigma_r: float,
    budget: SpectralBudget,
    sqrt_k: bool = True,
) -> bool:
    """True iff sqrt(k) (2 base_norm eps_bar + eps_bar^2) <= tau * sigma_r.

    With sqrt_k=False the (k - 1) / sqrt(k) multiplier is used instead.
    """
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    if eps_bar < 0:
        raise InvalidArgument(f"eps_bar must be nonnegative, got {eps_bar}")
    if not sigma_r > 0:
        raise NonpositiveSigma(f"sigma_r must be positive, got {sigma_r}")
    # compared in the same form that is recorded as certified_bound
    return _bound(k, eps_bar, base_norm, sigma_r, sqrt_k) <= budget.tolerance


def _check_shapes(blocks: Sequence) -> tuple[int, int]:
    if len(blocks) == 0:
        raise EmptyBlockList("cannot plan an empty block stream")
    shape = blocks[0].shape
    for i, b in enumerate(blocks[1:], start=1):
        if b.shape != shape:
            raise ShapeMismatch(i, shape, b.shape)
    return shape


def plan_groups(
    blocks: Sequence[ArrayLike],
    budget: SpectralBudget,
    rank_tol: float | None = None,
    sqrt_k: bool | None = None,
) -> GroupingPlan:
    """Segment the block stream into contiguous certified groups."""
    sqrt_k = config.SQRT_K if sqrt_k is None else sqrt_k
    mats = [as_matrix(b) for b in blocks]
    m, n = _check_shapes(mats)
    r = budget.target_rank

    groups: list[GroupSpec] = []
    start = 0
    while start < len(mats):
        ref = mats[start]
        sv = singular_values(ref)
        base_norm = float(sv[0])
        rank = numerical_rank(sv, m, n, rank_tol)

        if rank < r:
            logger.warning(
                f"Block {start} has numerical rank {rank} < target rank {r}; "
                f"emitting uncertified singleton group"
            )
            sigma_r = float(sv[r - 1]) if r <= sv.size else 0.0
            groups.append(GroupSpec(
                member_indices=(start,),
                reference_index=start,
                eps_bar=0.0,
                certified_bound=None,
                base_norm=base_norm,
                sigma_r=sigma_r,
                certified=False,
            ))
            start += 1
            continue

        sigma_r = float(sv[r - 1])
        members = [start]
        eps_bar = 0.0
        nxt = start + 1
        while nxt < len(mats):
            e_j = spectral_norm(mats[nxt] - ref)
            candidate = max(eps_bar, e_j)
            if not group_feasible(len(members) + 1, candidate, base_norm, sigma_r, budget, sqrt_k):
                logger.debug(f"Block {nxt} (e={e_j:.3e}) violates the budget; closing group at {start}")
                break
            members.append(nxt)
            eps_bar = candidate
            nxt += 1

        bound = _bound(len(members), eps_bar, base_norm, sigma_r, sqrt_k)
        groups.append(GroupSpec(
            member_indices=tuple(members),
            reference_index=start,
            eps_bar=eps_bar,
            certified_bound=bound,
            base_norm=base_norm,
            sigma_r=sigma_r,
        ))
        logger.info(
            f"Group at block {start}: k={len(members)}, eps_bar={eps_bar:.3e}, bound={bound:.3e}"
        )
        start = nxt

    return GroupingPlan(groups=tuple(groups), budget=budget, total_blocks=len(mats), sqrt_k=sqrt_k)


def certify_plan(plan: GroupingPlan, blocks: Sequence[ArrayLike]) -> list[float]:
    """Measured max_{i<=r} |sigma_i(M~) - sqrt(k) sigma_i(A_0)| for every group.

    M~ is the actual concatenation of the group's blocks; the reference spectrum
    comes from replicating the reference block's spectrum.
    """
    if len(blocks) != plan.total_blocks:
        raise PlanMismatch(f"plan covers {plan.total_blocks} blocks, got {len(blocks)}")
    covered = [i for g in plan.groups for i in g.member_indices]
    if covered != list(range(plan.total_blocks)):
        raise PlanMismatch("plan groups do not partition the block stream in order")

    mats = [as_matrix(b) for b in blocks]
    _check_shapes(mats)
    r = plan.budget.target_rank

    deviations = []
    for group in plan.groups:
        if group.k == 1:
            deviations.append(0.0)
            continue
        ideal = replicated_spectrum(singular_values(mats[group.reference_index]), group.k)
        actual = singular_values(concat_h([mats[i] for i in group.member_indices]))
        count = min(r, ideal.size, actual.size)
        deviations.append(bounds.weyl_gap(actual, ideal, count))
    return deviations
