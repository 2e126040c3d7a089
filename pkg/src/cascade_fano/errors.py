"""Exception hierarchy shared across the package."""


class CascadeFanoError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(CascadeFanoError, ValueError):
    """A parameter lies outside its admissible range."""


class DomainError(CascadeFanoError, ValueError):
    """A time or sample value lies outside the model's sample domain."""


class CapacityError(CascadeFanoError):
    """An exhaustive computation would exceed its enumeration guard."""


class UnsupportedError(CascadeFanoError):
    """The request is well formed but not supported by this implementation."""


class ConditionViolation(CascadeFanoError):
    """A transmission density is not bounded away from zero and infinity."""


class FormatError(CascadeFanoError, ValueError):
    """A text artifact could not be parsed.

    ``line`` is the 1-based line number of the offending line, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class HeaderError(FormatError):
    """Malformed or inconsistent file header."""


class ColumnCountError(FormatError):
    """A data row has the wrong number of fields."""


class ValueFormatError(FormatError):
    """A field could not be parsed or violates the declared domain."""
