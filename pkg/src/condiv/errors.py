"""Exception types shared across the package."""


class CondivError(Exception):
    """Base class for all package errors."""


class ExpressionError(CondivError):
    """Raised on a malformed coefficient expression.

    Carries the byte offset of the offending token in `offset`.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ModelValidationError(CondivError):
    """Raised when a model fails its assumption checks.

    The full `ValidationReport` is attached as `report`.
    """

    def __init__(self, report):
        super().__init__("model rejected:\n" + report.summary())
        self.report = report


class NumericalError(CondivError):
    """Integration blow-up, bracket exhaustion, or a violated solver invariant."""


class DomainTooSmallError(NumericalError):
    """No sign change found up to x_max; the solution domain must be enlarged."""
