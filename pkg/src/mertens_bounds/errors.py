"""Exception types raised across the package."""


class MertensBoundsError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(MertensBoundsError, ValueError):
    """An argument lies outside the documented domain."""


class PoleProximityError(MertensBoundsError, ArithmeticError):
    """Evaluation point is within the exclusion radius of a pole."""

    def __init__(self, message, pole=None):
        super().__init__(message)
        self.pole = pole


class TruncationError(MertensBoundsError, ArithmeticError):
    """A series did not reach its tolerance within the term budget."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class AccuracyError(MertensBoundsError, ArithmeticError):
    """An evaluator cannot certify the requested accuracy."""


class IncompleteTableError(MertensBoundsError):
    """Zero search could not match the expected zero count."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class NearMultipleZeroError(MertensBoundsError, ArithmeticError):
    """|zeta'(rho)| fell below the simplicity floor."""


class PotentialZeroError(MertensBoundsError, ArithmeticError):
    """A scan could not exclude a zero of zeta on the scanned segment."""


class RangeError(MertensBoundsError, OverflowError):
    """Result or input outside the representable or supported range."""


class HypothesisViolationError(MertensBoundsError):
    """A stated hypothesis of a bound is not satisfied."""


class FormatError(MertensBoundsError, ValueError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SegmentationError(MertensBoundsError, MemoryError):
    """A sieve segment exceeds the configured memory budget."""
