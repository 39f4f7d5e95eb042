"""
CSV interchange for dense matrices: one matrix row per line, decimal floats,
no header. Floats are written with 17 significant digits so a write/read
cycle is bit-exact.
"""

import logging
import os
from pathlib import Path

import numpy as np
import pandas as pd

from includes.errors import BlockFileError
from includes.matrix import DenseMatrix, as_matrix

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def read_matrix_csv(path: str | os.PathLike) -> DenseMatrix:
    """Load a CSV matrix. Raises BlockFileError naming the path on any failure."""
    path = Path(path)
    if not path.exists():
        raise BlockFileError(path, "file not found")
    try:
        df = pd.read_csv(
            path, header=None, skipinitialspace=True, dtype=np.float64, float_precision="round_trip"
        )
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise BlockFileError(path, f"cannot parse matrix CSV: {e}") from e
    try:
        return as_matrix(df.to_numpy())
    except ValueError as e:
        raise BlockFileError(path, str(e)) from e


def write_matrix_csv(path: str | os.PathLike, a) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(as_matrix(a)).to_csv(path, header=False, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise BlockFileError(path, f"cannot write: {e}") from e
    logger.debug(f"Wrote matrix CSV {path}")
    return path
