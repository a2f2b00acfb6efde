"""Exception and warning types shared across the package."""


class SomNbError(ValueError):
    """Base class for every data or contract violation raised by somnb."""


class TooShort(SomNbError):
    pass


class ZeroBaseYear(SomNbError):
    pass


class YearMismatch(SomNbError):
    pass


class ZeroTotal(SomNbError):
    pass


class ZeroVariance(SomNbError):
    pass


class InvalidSeries(SomNbError):
    pass


class MissingSector(SomNbError):
    pass


class MalformedRow(SomNbError):
    """A CSV line that cannot be parsed. ``line`` is 1-based, header included."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NonFinite(SomNbError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class DimensionMismatch(SomNbError):
    pass


class EmptyInput(SomNbError):
    pass


class LengthMismatch(SomNbError):
    pass


class UnknownLabel(SomNbError, KeyError):
    pass


class TooManyLabels(SomNbError):
    pass


class SchemaError(SomNbError):
    """A serialized document has the wrong schema tag or missing fields."""


class EmptySomCluster(UserWarning):
    """A map unit won no training rows; its class cannot be predicted."""
