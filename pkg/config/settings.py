"""
Central configuration for blockspec.

This file contains the numerical constants and tolerances shared by the library,
the certification harness and the CLI. Values are version-controlled and visible,
making them easy to audit when a bound check starts failing.

Every value can be overridden by an environment variable (or a `.env` file).
"""
import os
from dotenv import load_dotenv

# Load environment variables early so class-level os.getenv calls work
load_dotenv()


def _getbool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("1", "true", "yes")


class Config:
    """Application configuration settings"""

    VERSION = "0.1.0"

    # ==================== Data Storage Settings ====================

    # Default directory for reports and compressed containers
    DATA_DIR = os.getenv("DATA_DIR", "./data")

    # ==================== Spectral Norm ====================

    # Rayleigh residual, relative to sigma_1^2, at which power iteration stops
    POWER_ITERATION_TOL = float(os.getenv("POWER_ITERATION_TOL", "1e-12"))

    # Iteration cap before ConvergenceFailure
    POWER_ITERATION_MAX_ITER = int(os.getenv("POWER_ITERATION_MAX_ITER", "10000"))

    # ==================== Rank & Tolerances ====================

    # Relative rank tolerance. Empty means max(m, n) * machine epsilon.
    RANK_REL_TOL = os.getenv("RANK_REL_TOL", "")

    # Slack (relative to scale) allowed when comparing a measured value to its bound
    SOUNDNESS_REL_TOL = float(os.getenv("SOUNDNESS_REL_TOL", "1e-9"))

    # Orthonormality check for singular vector factors
    ORTHONORMALITY_TOL = float(os.getenv("ORTHONORMALITY_TOL", "1e-10"))

    # ==================== Planner ====================

    # True: sqrt(k) multiplier as stated for the group size rule.
    # False: the tighter (k - 1) / sqrt(k) form.
    SQRT_K = _getbool("SQRT_K", "true")

    # ==================== Harness ====================

    DEFAULT_TRIALS = int(os.getenv("DEFAULT_TRIALS", "100"))

    # Thread pool size for independent trials (1 = sequential)
    HARNESS_WORKERS = int(os.getenv("HARNESS_WORKERS", "1"))

    # ==================== File Formats ====================

    REPORT_SCHEMA_VERSION = int(os.getenv("REPORT_SCHEMA_VERSION", "1"))
    CONTAINER_SCHEMA_VERSION = int(os.getenv("CONTAINER_SCHEMA_VERSION", "1"))
    MANIFEST_SCHEMA_VERSION = 1

    # ==================== Development Settings ====================

    DEBUG = _getbool("DEBUG", "false")

    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

    # ==================== Helper Methods ====================

    @classmethod
    def get_rank_rel_tol(cls) -> float | None:
        """Return the configured rank tolerance, or None for the shape-based default."""
        return float(cls.RANK_REL_TOL) if cls.RANK_REL_TOL.strip() else None

    @classmethod
    def to_dict(cls) -> dict:
        """Return all configuration values as a dictionary"""
        return {
            key: value for key, value in vars(cls).items()
            if not key.startswith('_') and key.isupper()
        }

    @classmethod
    def print_config(cls):
        """Print current configuration (useful for debugging)"""
        print("=" * 60)
        print("blockspec Configuration")
        print("=" * 60)
        for key, value in sorted(cls.to_dict().items()):
            print(f"{key:30} = {value}")
        print("=" * 60)

    @classmethod
    def validate(cls):
        """
        Validate that tolerances and limits are usable.
        Raises ValueError listing every offending key.
        """
        problems = []
        if not cls.POWER_ITERATION_TOL > 0:
            problems.append("POWER_ITERATION_TOL")
        if cls.POWER_ITERATION_MAX_ITER < 1:
            problems.append("POWER_ITERATION_MAX_ITER")
        if not cls.SOUNDNESS_REL_TOL >= 0:
            problems.append("SOUNDNESS_REL_TOL")
        if cls.HARNESS_WORKERS < 1:
            problems.append("HARNESS_WORKERS")
        rank_tol = cls.get_rank_rel_tol()
        if rank_tol is not None and not rank_tol >= 0:
            problems.append("RANK_REL_TOL")

        if problems:
            raise ValueError(f"Invalid configuration: {', '.join(problems)}")

        return True


# Create singleton instance
config = Config()
