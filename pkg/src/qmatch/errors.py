"""Exception types shared across the package."""


class QMatchError(Exception):
    """Base class for all errors raised by qmatch."""


class DimensionError(QMatchError, ValueError):
    """Operands disagree in size."""


class ValidationError(QMatchError, ValueError):
    """An input violates a documented precondition."""


class CapabilityError(QMatchError):
    """The requested operation is not supported for this input (e.g. too large)."""


class ParseError(QMatchError, ValueError):
    """A file could not be parsed.

    ``line`` is the 1-based line number where the problem was detected, if known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f"{':' if where else 'line '}{line}"
        super().__init__(f"{where}: {message}" if where else message)


class SolverError(QMatchError):
    """A solver failed to produce a result."""
