"""
Exception hierarchy for blockspec.

Every error derives from BlockSpecError, itself a ValueError, and carries the
CLI exit code it maps to.
"""

from config.commands import EXIT_CODES


class BlockSpecError(ValueError):
    """Base class for all library errors."""

    exit_code = EXIT_CODES["io"]


class InvalidArgument(BlockSpecError):
    pass


class EmptyBlockList(BlockSpecError):
    pass


class ShapeMismatch(BlockSpecError):
    """Blocks disagree in shape. Reports the offending index and both shapes."""

    exit_code = EXIT_CODES["shape"]

    def __init__(self, index: int, expected: tuple, actual: tuple, what: str = "block"):
        self.index = index
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(
            f"{what} {index} has shape {self.actual}, expected {self.expected}"
        )


class ConvergenceFailure(BlockSpecError):
    def __init__(self, message: str, iterations: int | None = None):
        self.iterations = iterations
        if iterations is not None:
            message = f"{message} (after {iterations} iterations)"
        super().__init__(message)


class UnsortedSpectrum(BlockSpecError):
    pass


class ZeroK(BlockSpecError):
    pass


class NonSquareGrid(BlockSpecError):
    pass


class ZeroSigmaAtRank(BlockSpecError):
    pass


class LengthMismatch(BlockSpecError):
    pass


class NonpositiveTau(BlockSpecError):
    pass


class NonpositiveSigma(BlockSpecError):
    pass


class RankDeficientReference(BlockSpecError):
    exit_code = EXIT_CODES["rank_deficient"]


class PlanMismatch(BlockSpecError):
    pass


class RankTooLarge(BlockSpecError):
    exit_code = EXIT_CODES["rank_too_large"]


class IndexOutOfRange(BlockSpecError):
    pass


class EmptyGrid(BlockSpecError):
    pass


class BlockFileError(BlockSpecError):
    """A matrix, manifest or container file could not be read or written."""

    def __init__(self, path, reason: str):
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")


class TrialFailure(BlockSpecError):
    """A numerical failure inside a harness trial, tagged for replay."""

    def __init__(self, trial: int, seed: int, cause: Exception):
        self.trial = trial
        self.seed = seed
        super().__init__(f"trial {trial} (seed {seed}) failed: {cause}")


class SoundnessViolation(BlockSpecError):
    exit_code = EXIT_CODES["soundness"]

    def __init__(self, message: str, seed: int | None = None):
        self.seed = seed
        if seed is not None:
            message = f"{message} [replay seed {seed}]"
        super().__init__(message)
