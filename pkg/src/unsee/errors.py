"""Exception hierarchy shared across the package."""


class UnseeError(Exception):
    """Base class for all package-specific errors."""


class DegenerateBatchError(UnseeError):
    """Batch too small for the requested statistic (needs >= 2 rows)."""


class ShapeMismatchError(UnseeError):
    """Operands have incompatible shapes."""


class SingularMatrixError(UnseeError):
    """Cholesky factorization failed; matrix not positive definite."""


class UndefinedCorrelationError(UnseeError):
    """Rank correlation undefined (zero rank variance on one side)."""


class NonFiniteError(UnseeError):
    """A value that must be finite is NaN or infinite."""


class EmptySentenceError(UnseeError):
    """Sentence produced no tokens."""


class VocabError(UnseeError):
    """Vocabulary construction or lookup failure."""


class ConfigError(UnseeError):
    """Run-config file is malformed or carries unknown/invalid keys."""


class EvalDataError(UnseeError):
    """Labeled-pair TSV is malformed."""


class TrainingAbort(UnseeError):
    """Training stopped on a non-finite loss; carries the failing step."""

    def __init__(self, step, message):
        super().__init__(message)
        self.step = step


class CheckpointError(UnseeError):
    """Base class for checkpoint file problems."""


class BadMagicError(CheckpointError):
    """File does not start with the checkpoint magic bytes."""


class TruncatedCheckpointError(CheckpointError):
    """Payload shorter than the header's shape table promises."""


class CheckpointShapeError(CheckpointError):
    """Stored tensor shapes disagree with the requested model layout."""
