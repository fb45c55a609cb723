"""Exception hierarchy shared across the package."""


class AnomalycdError(Exception):
    """Base class for all package errors."""


class InputError(AnomalycdError):
    """Invalid user input: bad file, bad argument, violated precondition."""


class StageError(AnomalycdError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage


class InvariantViolation(AnomalycdError):
    """An internal contract was broken; indicates a bug, not bad input."""


class NoPeriodError(AnomalycdError):
    """The signal has no dominant spectral period."""
