class NumericsError(Exception):
    """Base class for numerical failures raised by this package."""


class PrecisionExhausted(NumericsError):
    """Requested accuracy cannot be certified below the precision ceiling."""


class ConvergenceError(NumericsError):
    """An adaptive loop (depth doubling, node doubling) hit its cap."""


class CalibrationError(NumericsError):
    """The shooting classifier could not be calibrated from the coarse scan."""


class DivisionGuardError(NumericsError):
    """``1 - a_n**2`` vanished at working precision.

    ``index`` is the offending recurrence index.
    """

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"1 - a_n^2 vanished at index {index}")


class PositivityError(NumericsError):
    """A moment sequence produced a reflection coefficient with |a_n| >= 1."""

    def __init__(self, index: int, value):
        self.index = index
        self.value = value
        super().__init__(f"|a_{index}| >= 1 (a_{index} = {value}); moments not positive definite at working precision")
