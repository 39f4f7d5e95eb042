"""
Randomized certification of every bound against full-SVD oracles.

Each trial draws blocks and perturbations from seeds derived from one master
seed, evaluates the closed-form bounds from `includes.bounds`, and measures the
true quantities with an SVD of the explicit matrices. Nothing measured here is
computed through the code under test.

Usage:
    cfg = TrialConfig(m=8, n=4, k=3, base_rank=4, eps=0.05, seed=1, trials=100)
    records = run_bound_trials(cfg)
    summary = summarize(records)
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
import pandas as pd

from config import config
from includes import bounds
from includes.errors import (
    BlockSpecError,
    EmptyGrid,
    InvalidArgument,
    RankTooLarge,
    SoundnessViolation,
    TrialFailure,
)
from includes.matrix import (
    DenseMatrix,
    as_matrix,
    concat_h,
    numerical_rank,
    singular_values,
)

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = (x + _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, stream: int) -> int:
    """Independent 64-bit seed for sub-stream `stream` of `master`."""
    return splitmix64((master + stream * _GAMMA) & _MASK64)


class BoundName(str, Enum):
    GRAM_RIGHT = "gram_right"
    GRAM_LEFT = "gram_left"
    DEVIATION_NONZERO = "deviation_nonzero"
    DEVIATION_ZERO = "deviation_zero"
    BLOCK_NORM = "block_norm"
    CENTROID = "centroid"
    CENTROID_ENVELOPE = "centroid_envelope"


@dataclass(frozen=True)
class TrialConfig:
    m: int
    n: int
    k: int
    base_rank: int
    eps: float
    seed: int
    trials: int = 1

    def __post_init__(self):
        if min(self.m, self.n, self.k) < 1:
            raise InvalidArgument(f"dimensions must be positive, got m={self.m}, n={self.n}, k={self.k}")
        if not 1 <= self.base_rank <= min(self.m, self.n):
            raise RankTooLarge(f"base rank {self.base_rank} outside 1..{min(self.m, self.n)}")
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise InvalidArgument(f"eps must be finite and nonnegative, got {self.eps}")
        if self.trials < 1:
            raise InvalidArgument(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed <= _MASK64:
            raise InvalidArgument(f"seed must fit in 64 bits, got {self.seed}")

    def to_dict(self) -> dict:
        return {
            "m": self.m, "n": self.n, "k": self.k, "base_rank": self.base_rank,
            "eps": self.eps, "seed": self.seed, "trials": self.trials,
        }


def tightness_ratio(actual: float, bound: float, slack: float = 0.0) -> float:
    """(actual - slack) / bound, floored at 0; 0/0 -> 0.

    The ratio is at most 1 exactly when actual <= bound + slack, so a record
    is sound iff its ratio is at most 1.
    """
    excess = max(0.0, actual - slack)
    if excess == 0.0:
        return 0.0
    if bound > 0:
        return excess / bound
    return math.inf


@dataclass(frozen=True)
class TightnessRecord:
    bound_name: BoundName
    actual: float
    bound: float
    ratio: float
    trial: int
    seed: int
    index: int | None = None
    slack: float = 0.0

    @property
    def sound(self) -> bool:
        return self.ratio <= 1.0

    def to_dict(self) -> dict:
        return {
            "bound": self.bound_name.value,
            "index": self.index,
            "actual": self.actual,
            "value": self.bound,
            "ratio": self.ratio,
            "trial": self.trial,
            "seed": self.seed,
        }


def _record(name, actual, bound, trial, seed, slack, index=None) -> TightnessRecord:
    actual, bound = float(actual), float(bound)
    return TightnessRecord(
        bound_name=name,
        actual=actual,
        bound=bound,
        ratio=tightness_ratio(actual, bound, slack),
        trial=trial,
        seed=seed,
        index=index,
        slack=slack,
    )


# ----------------------------------------------------------------------
# Instance generators
# ----------------------------------------------------------------------

def gen_block(m: int, n: int, rank: int, seed: int) -> DenseMatrix:
    """Product of m x rank and rank x n Gaussian factors, rescaled to ||.||_2 = 1."""
    if rank < 1:
        raise InvalidArgument(f"rank must be >= 1, got {rank}")
    if rank > min(m, n):
        raise RankTooLarge(f"rank {rank} exceeds min({m}, {n})")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))
    return as_matrix(a / singular_values(a)[0])


def gen_perturbation(m: int, n: int, eps: float, seed: int) -> DenseMatrix:
    """Gaussian matrix rescaled to spectral norm eps (zero matrix for eps = 0)."""
    if eps < 0:
        raise InvalidArgument(f"eps must be nonnegative, got {eps}")
    if eps == 0:
        return as_matrix(np.zeros((m, n)))
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((m, n))
    return as_matrix(e * (eps / singular_values(e)[0]))


# ----------------------------------------------------------------------
# Bound trials
# ----------------------------------------------------------------------

def _oracle_norm(a: np.ndarray) -> float:
    # measured side of every record; kept apart from the library path
    return float(singular_values(a)[0])


def _run_trial(cfg: TrialConfig, trial: int) -> list[TightnessRecord]:
    seed = derive_seed(cfg.seed, trial)
    m, n, k = cfg.m, cfg.n, cfg.k
    rng = np.random.default_rng(derive_seed(seed, 0))
    scales = rng.uniform(0.5, 2.0, size=k)
    fractions = rng.uniform(0.0, 1.0, size=k)
    grid_norms = rng.uniform(0.0, 1.0, size=(k, k))

    blocks = [as_matrix(scales[j] * gen_block(m, n, cfg.base_rank, derive_seed(seed, 1 + j))) for j in range(k)]
    perts = [gen_perturbation(m, n, cfg.eps * fractions[j], derive_seed(seed, 1 + k + j)) for j in range(k)]
    norms = bounds.BlockNorms.from_blocks(blocks, perts)

    records: list[TightnessRecord] = []
    tol = config.SOUNDNESS_REL_TOL

    # --- general concatenation: Gram lemmas and per-index bounds ---
    M = concat_h(blocks)
    Mt = concat_h([a + e for a, e in zip(blocks, perts)])
    sv_m = singular_values(M)
    sv_mt = singular_values(Mt)
    sv_scale = max(1.0, float(sv_m[0]))
    gram_scale = max(1.0, float(sv_m[0]) ** 2)
    rank = numerical_rank(sv_m, m, k * n)

    report = bounds.sv_deviation_bounds(norms, sv_m, rank)
    if report.gram_left > report.gram_right * (1 + 1e-12):
        raise SoundnessViolation(
            f"trial {trial}: left-Gram bound {report.gram_left!r} exceeds right-Gram bound {report.gram_right!r}",
            seed=seed,
        )

    records.append(_record(BoundName.GRAM_RIGHT, _oracle_norm(Mt.T @ Mt - M.T @ M),
                           report.gram_right, trial, seed, tol * gram_scale))
    records.append(_record(BoundName.GRAM_LEFT, _oracle_norm(Mt @ Mt.T - M @ M.T),
                           report.gram_left, trial, seed, tol * gram_scale))
    for i in range(rank):
        records.append(_record(BoundName.DEVIATION_NONZERO, abs(sv_mt[i] - sv_m[i]),
                               report.nonzero_index_bounds[i], trial, seed, tol * sv_scale, index=i))
    for i in range(rank, sv_mt.size):
        records.append(_record(BoundName.DEVIATION_ZERO, sv_mt[i], report.zero_index_bound,
                               trial, seed, tol * sv_scale, index=i))

    # --- block matrix norm ---
    grid = [[gen_perturbation(m, n, grid_norms[i, j], derive_seed(seed, 1 + 2 * k + i * k + j))
             for j in range(k)] for i in range(k)]
    grid_bound = bounds.block_norm_bound([[_oracle_norm(b) for b in row] for row in grid])
    records.append(_record(BoundName.BLOCK_NORM, _oracle_norm(np.block(grid)), grid_bound,
                           trial, seed, tol * max(1.0, grid_bound)))

    # --- centroid setting: k copies of the first block ---
    ref = blocks[0]
    sv_a = singular_values(ref)
    rank_a = numerical_rank(sv_a, m, n)
    Mc = concat_h([ref] + [ref + e for e in perts[1:]])
    sv_mc = singular_values(Mc)
    centroid = bounds.centroid_bounds(norms.base_norms[0], sv_a, rank_a, norms.pert_norms[1:], k)
    c_scale = tol * max(1.0, math.sqrt(k) * float(sv_a[0]))
    # the envelope needs at least one perturbed copy and a positive cap
    with_envelope = k >= 2 and cfg.eps > 0
    for i in range(rank_a):
        deviation = abs(sv_mc[i] - centroid.reference_spectrum[i])
        records.append(_record(BoundName.CENTROID, deviation, centroid.nonzero_index_bounds[i],
                               trial, seed, c_scale, index=i))
        if with_envelope:
            envelope, _ = bounds.continuity_envelope(norms.base_norms[0], float(sv_a[i]), k, cfg.eps)
            records.append(_record(BoundName.CENTROID_ENVELOPE, deviation, envelope,
                                   trial, seed, c_scale, index=i))
    for i in range(rank_a, sv_mc.size):
        records.append(_record(BoundName.CENTROID, sv_mc[i], centroid.zero_index_bound,
                               trial, seed, c_scale, index=i))
        if with_envelope:
            _, zero_envelope = bounds.continuity_envelope(norms.base_norms[0], float(sv_a[0]), k, cfg.eps)
            records.append(_record(BoundName.CENTROID_ENVELOPE, sv_mc[i], zero_envelope,
                                   trial, seed, c_scale, index=i))

    return records


def run_trial(cfg: TrialConfig, trial: int) -> list[TightnessRecord]:
    """One trial; numerical failures are re-raised tagged with the trial seed."""
    try:
        return _run_trial(cfg, trial)
    except SoundnessViolation:
        raise
    except (BlockSpecError, np.linalg.LinAlgError) as e:
        raise TrialFailure(trial, derive_seed(cfg.seed, trial), e) from e


def run_bound_trials(cfg: TrialConfig, workers: int | None = None) -> list[TightnessRecord]:
    """All trials of `cfg`, merged in trial order regardless of `workers`."""
    workers = config.HARNESS_WORKERS if workers is None else workers
    indices = range(cfg.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(lambda t: run_trial(cfg, t), indices))
    else:
        per_trial = [run_trial(cfg, t) for t in indices]
    records = [r for batch in per_trial for r in batch]
    logger.info(f"Ran {cfg.trials} trials, {len(records)} records")
    return records


def violations(records: Sequence[TightnessRecord]) -> list[TightnessRecord]:
    return [r for r in records if not r.sound]


def summarize(records: Sequence[TightnessRecord]) -> dict[str, dict]:
    """Max ratio, record count and violation count per bound name."""
    summary: dict[str, dict] = {}
    for name in BoundName:
        subset = [r for r in records if r.bound_name is name]
        if not subset:
            continue
        summary[name.value] = {
            "records": len(subset),
            "max_ratio": max(r.ratio for r in subset),
            "violations": sum(1 for r in subset if not r.sound),
        }
    return summary


# ----------------------------------------------------------------------
# Continuity sweep
# ----------------------------------------------------------------------

SWEEP_COLUMNS = ["eps", "max_deviation", "envelope", "max_zero_index", "zero_envelope", "sound"]


def run_continuity_sweep(base_cfg: TrialConfig, eps_grid: Sequence[float]) -> pd.DataFrame:
    """Measured top-r deviation from sqrt(k) sigma_i(A) against the envelope, per eps.

    Perturbation directions are fixed per (trial, block) and only rescaled along
    the grid, so the measured deviation tracks eps.
    """
    grid = [float(e) for e in eps_grid]
    if not grid:
        raise EmptyGrid("eps grid is empty")
    if any(not e > 0 for e in grid):
        raise InvalidArgument("eps grid values must be positive")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise InvalidArgument("eps grid must be strictly decreasing")
    k = base_cfg.k
    if k < 2:
        raise InvalidArgument("continuity sweep needs k >= 2")

    m, n = base_cfg.m, base_cfg.n
    ref = gen_block(m, n, base_cfg.base_rank, derive_seed(base_cfg.seed, 0))
    sv_a = singular_values(ref)
    rank_a = numerical_rank(sv_a, m, n)
    base_norm = float(sv_a[0])
    reference = math.sqrt(k) * sv_a
    slack = config.SOUNDNESS_REL_TOL * max(1.0, float(reference[0]))

    rows = []
    for eps in grid:
        deviation = 0.0
        zero_index = 0.0
        for t in range(base_cfg.trials):
            perts = [gen_perturbation(m, n, eps, derive_seed(base_cfg.seed, 1 + t * k + j))
                     for j in range(1, k)]
            sv_mt = singular_values(concat_h([ref] + [ref + e for e in perts]))
            deviation = max(deviation, float(np.max(np.abs(sv_mt[:rank_a] - reference[:rank_a]))))
            if sv_mt.size > rank_a:
                zero_index = max(zero_index, float(np.max(sv_mt[rank_a:])))
        envelope, zero_envelope = bounds.continuity_envelope(base_norm, float(sv_a[rank_a - 1]), k, eps)
        rows.append({
            "eps": eps,
            "max_deviation": deviation,
            "envelope": envelope,
            "max_zero_index": zero_index,
            "zero_envelope": zero_envelope,
            "sound": (tightness_ratio(deviation, envelope, slack) <= 1.0
                      and tightness_ratio(zero_index, zero_envelope, slack) <= 1.0),
        })
        logger.debug(f"eps={eps:.1e}: deviation={deviation:.3e} envelope={envelope:.3e}")
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def check_decay(table: pd.DataFrame) -> bool:
    """final <= first / 10 when the grid spans at least two decades; True otherwise."""
    if len(table) < 2:
        return True
    first, last = table.iloc[0], table.iloc[-1]
    if math.log10(first["eps"] / last["eps"]) < 2:
        return True
    return bool(last["max_deviation"] <= first["max_deviation"] / 10)
