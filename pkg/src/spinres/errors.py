"""Exception hierarchy.  Each class carries the CLI exit code and a short
machine-readable code that prefixes the one-line error message."""


class SpinresError(Exception):
    exit_code = 1
    code = "E_SPINRES"


class ValidationError(SpinresError, ValueError):
    """Invalid argument: bad spin, non-unit vector, non-Hermitian matrix..."""

    exit_code = 3
    code = "E_VALIDATION"


class InvalidSpinError(ValidationError):
    code = "E_SPIN"


class CapacityError(ValidationError):
    code = "E_CAPACITY"


class ConfigError(SpinresError, ValueError):
    exit_code = 2
    code = "E_CONFIG"

    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = ""
        if line is not None:
            where = f"{path or '<config>'}:{line}:{column or 1}: "
        super().__init__(where + message)


class DataError(SpinresError, ValueError):
    exit_code = 3
    code = "E_DATA"


class SchemaError(DataError):
    code = "E_SCHEMA"


class InsufficientDataError(DataError):
    code = "E_INSUFFICIENT"


class PeakDetectionError(DataError):
    code = "E_PEAKS"

    def __init__(self, message, found=()):
        self.found = list(found)
        super().__init__(message)


class RankDeficiencyError(DataError):
    """The Jacobian has (numerically) dependent columns.

    ``combination`` maps parameter names to the coefficients of the
    null-space direction that the data cannot constrain.
    """

    code = "E_RANK"

    def __init__(self, message, combination=None):
        self.combination = dict(combination or {})
        super().__init__(message)


class ConvergenceError(SpinresError):
    exit_code = 4
    code = "E_NOCONVERGE"


class OutputError(SpinresError, OSError):
    exit_code = 5
    code = "E_IO"
