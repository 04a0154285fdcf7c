"""Exception types raised across the package."""


class PlanocheckError(Exception):
    pass


class ParseError(PlanocheckError):
    """Malformed planogram XML."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class SchemaError(PlanocheckError):
    """Well-formed XML that does not follow the planogram schema."""


class FormatError(PlanocheckError):
    """Scene file that does not follow the scene format."""


class SpecError(PlanocheckError):
    """Invalid synthetic scene specification."""


class NumericalError(PlanocheckError):
    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class EmptyDetection(PlanocheckError):
    """No recurring pattern survived detection and merging."""
