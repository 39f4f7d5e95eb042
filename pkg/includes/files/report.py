"""
Versioned JSON reports produced by every CLI subcommand.

Serialization is deterministic: keys keep insertion order, floats use Python's
shortest round-trip repr (never more than 17 significant digits, bit-exact on
re-read), and non-finite values are rejected. Wall time is only included when
requested so default reports are byte-identical across runs.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from config import config
from includes.errors import BlockFileError, InvalidArgument

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and infinities into JSON-ready values.

    math.inf becomes the string "unbounded" (used for kmax); NaN is an error.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value) and value > 0:
            return "unbounded"
        if not math.isfinite(value):
            raise InvalidArgument(f"non-finite value {value} in report")
        return value
    if isinstance(value, os.PathLike):
        return str(value)
    return value


@dataclass
class Report:
    command: str
    config: dict
    results: dict
    seed: int | None = None
    wall_time: float | None = None
    version: str = config.VERSION
    schema_version: int = config.REPORT_SCHEMA_VERSION
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        payload = {
            "schema_version": self.schema_version,
            "version": self.version,
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
        }
        if self.notes:
            payload["notes"] = self.notes
        if self.wall_time is not None:
            payload["wall_time_seconds"] = self.wall_time
        return to_jsonable(payload)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def write(self, path: str | os.PathLike) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_json())
        except OSError as e:
            logger.error(f"Failed to write report {path}: {e}")
            raise BlockFileError(path, f"cannot write report: {e}") from e
        logger.info(f"Report written to {path}")
        return path
