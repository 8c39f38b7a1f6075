"""Exception hierarchy."""


class RandCurError(Exception):
    """Base class for all errors raised by randcur."""


class ParameterError(RandCurError, ValueError):
    """Invalid argument or configuration value."""


class FormatError(RandCurError, ValueError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RankDeficiencyError(RandCurError, ArithmeticError):
    """A pivot, sketch or skeleton turned out numerically rank deficient.

    ``step`` is the 0-based elimination step (when known) and ``stage`` names
    the pipeline stage that failed.
    """

    def __init__(self, message, step=None, stage=None):
        self.step = step
        self.stage = stage
        if stage is not None:
            message = f"[{stage}] {message}"
        super().__init__(message)


class InstabilityError(RandCurError, ArithmeticError):
    """Non-finite values appeared during an unstabilized iteration."""
