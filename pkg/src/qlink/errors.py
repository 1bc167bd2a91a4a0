"""Exception hierarchy for qlink."""


class QlinkError(Exception):
    """Base class for all qlink errors."""


class InvalidParameter(QlinkError, ValueError):
    pass


class BelowHorizon(QlinkError, ValueError):
    pass


class NeverVisible(QlinkError, ValueError):
    pass


class EmptyWindow(QlinkError, ValueError):
    pass


class EmptyChain(QlinkError, ValueError):
    pass


class EpochMismatch(QlinkError, ValueError):
    pass


class Underdetermined(QlinkError, ValueError):
    pass


class IllConditioned(QlinkError, ArithmeticError):
    pass


class OutOfDomain(QlinkError, ValueError):
    pass


class NoReturns(QlinkError, ValueError):
    pass


class EmptyStream(QlinkError, ValueError):
    pass


class TooShort(QlinkError, ValueError):
    pass


class TimeTagFormatError(QlinkError, ValueError):
    """Malformed or unsorted time-tag file; ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ParseError(QlinkError, ValueError):
    """Scenario file could not be parsed."""

    def __init__(self, message, lineno=None, field=None):
        self.lineno = lineno
        self.field = field
        parts = []
        if lineno is not None:
            parts.append(f"line {lineno}")
        if field is not None:
            parts.append(field)
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ValidationError(QlinkError, ValueError):
    """Scenario violates one or more invariants; ``violations`` lists them."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))
