"""Exception hierarchy for ampcap."""


class AmpcapError(Exception):
    """Base class for all errors raised by ampcap."""


class DomainError(AmpcapError, ValueError):
    """Argument outside the mathematical domain of a function."""


class DimensionError(AmpcapError, ValueError):
    """Incompatible matrix/vector/space dimensions."""


class BudgetError(AmpcapError):
    """A computation would exceed its enumeration budget."""


class RankDeficiencyError(AmpcapError, ValueError):
    """An operation needs an invertible (or full rank) channel matrix."""


class PreconditionError(AmpcapError, ValueError):
    """A stated precondition of a bound is violated."""


class ConfigError(AmpcapError, ValueError):
    """Unparsable or invalid sweep/audit configuration."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.line = line
        self.field = field


class NumericError(AmpcapError, ArithmeticError):
    """Iterative evaluation failed to converge.

    ``partial`` carries the best estimate available when the budget ran out.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
