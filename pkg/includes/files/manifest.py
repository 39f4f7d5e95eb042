"""
JSON manifests naming the block files and the spectral budget.

    {
      "schema_version": 1,
      "blocks": ["a0.csv", "a1.csv"],
      "budget": {"rank": 2, "tau": 0.1},
      "rank_tol": null,
      "reference_policy": "first-of-group"
    }

Relative block paths resolve against the manifest's directory.
"""

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

from config import config
from includes.errors import BlockFileError, ShapeMismatch
from includes.files.matrix_csv import read_matrix_csv
from includes.matrix import DenseMatrix
from includes.planner import SpectralBudget

logger = logging.getLogger(__name__)

REFERENCE_POLICY = "first-of-group"


@dataclass(frozen=True)
class Manifest:
    block_paths: tuple[Path, ...]
    budget: SpectralBudget
    rank_tol: float | None = None
    reference_policy: str = REFERENCE_POLICY

    def to_dict(self) -> dict:
        return {
            "schema_version": config.MANIFEST_SCHEMA_VERSION,
            "blocks": [str(p) for p in self.block_paths],
            "budget": {"rank": self.budget.target_rank, "tau": self.budget.tolerance},
            "rank_tol": self.rank_tol,
            "reference_policy": self.reference_policy,
        }


def load_manifest(
    path: str | os.PathLike,
    rank: int | None = None,
    tau: float | None = None,
    rank_tol: float | None = None,
) -> Manifest:
    """Read a manifest; rank/tau/rank_tol arguments override the file's values."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as e:
        raise BlockFileError(path, f"cannot read manifest: {e}") from e
    except json.JSONDecodeError as e:
        raise BlockFileError(path, f"invalid JSON: {e}") from e

    version = raw.get("schema_version", config.MANIFEST_SCHEMA_VERSION)
    if version != config.MANIFEST_SCHEMA_VERSION:
        raise BlockFileError(path, f"unsupported manifest schema version {version}")

    blocks = raw.get("blocks") or []
    if not blocks:
        raise BlockFileError(path, "manifest lists no blocks")

    policy = raw.get("reference_policy", REFERENCE_POLICY)
    if policy != REFERENCE_POLICY:
        raise BlockFileError(path, f"unsupported reference_policy '{policy}'")

    budget_raw = raw.get("budget") or {}
    rank = rank if rank is not None else budget_raw.get("rank")
    tau = tau if tau is not None else budget_raw.get("tau")
    if rank is None or tau is None:
        raise BlockFileError(path, "budget needs 'rank' and 'tau' (in the file or as flags)")
    try:
        budget = SpectralBudget(target_rank=int(rank), tolerance=float(tau))
    except ValueError as e:
        raise BlockFileError(path, str(e)) from e

    base_dir = path.parent
    block_paths = tuple(
        Path(p) if Path(p).is_absolute() else base_dir / p for p in blocks
    )
    return Manifest(
        block_paths=block_paths,
        budget=budget,
        rank_tol=rank_tol if rank_tol is not None else raw.get("rank_tol"),
        reference_policy=policy,
    )


def load_blocks(manifest: Manifest) -> list[DenseMatrix]:
    """Read every block; ShapeMismatch names the offending file."""
    blocks = []
    for i, p in enumerate(manifest.block_paths):
        a = read_matrix_csv(p)
        if blocks and a.shape != blocks[0].shape:
            raise ShapeMismatch(i, blocks[0].shape, a.shape, what=f"block file {p}")
        blocks.append(a)
    logger.info(f"Loaded {len(blocks)} blocks of shape {blocks[0].shape}")
    return blocks


def write_manifest(
    path: str | os.PathLike,
    block_paths,
    rank: int,
    tau: float,
    rank_tol: float | None = None,
) -> Path:
    path = Path(path)
    payload = {
        "schema_version": config.MANIFEST_SCHEMA_VERSION,
        "blocks": [str(p) for p in block_paths],
        "budget": {"rank": rank, "tau": tau},
        "rank_tol": rank_tol,
        "reference_policy": REFERENCE_POLICY,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path
