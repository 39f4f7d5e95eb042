"""Pytest configuration and shared fixtures for blockspec tests.

This module provides fixtures for:
- Seeded random generators
- Small hand-checkable block collections
- Manifests of CSV blocks written to a temporary directory
"""

import os
import sys

import numpy as np
import pytest

# Add parent directory to path to import project modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from includes.files.manifest import write_manifest
from includes.files.matrix_csv import write_matrix_csv
from includes.harness import gen_perturbation

# ============================================================================
# Random Generators
# ============================================================================

@pytest.fixture
def rng():
    """A seeded generator so every test run sees the same draws."""
    return np.random.default_rng(42)


# ============================================================================
# Block Collections
# ============================================================================

def noisy_identity_stream(count: int, eps: float, size: int = 3, seed: int = 11) -> list[np.ndarray]:
    """Identity reference followed by copies perturbed by exactly `eps` in spectral norm.

    ||A_0||_2 = sigma_r(A_0) = 1 for every r <= size.
    """
    ref = np.eye(size)
    return [ref] + [ref + gen_perturbation(size, size, eps, seed + j) for j in range(1, count)]


@pytest.fixture
def noisy_stream():
    """30 blocks: I_3 then 29 copies with ||E_j||_2 = 0.01."""
    return noisy_identity_stream(30, 0.01)


# ============================================================================
# Manifests
# ============================================================================

@pytest.fixture
def make_manifest(tmp_path):
    """Write blocks as CSV files plus a manifest; returns the manifest path."""

    def _make(blocks, rank=1, tau=0.1, rank_tol=None, name="manifest.json"):
        paths = []
        for i, b in enumerate(blocks):
            write_matrix_csv(tmp_path / f"block_{i:03d}.csv", b)
            paths.append(f"block_{i:03d}.csv")
        return write_manifest(tmp_path / name, paths, rank=rank, tau=tau, rank_tol=rank_tol)

    return _make
