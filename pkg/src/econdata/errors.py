"""Exception hierarchy shared by the ingestion and analysis modules."""


class EconDataError(ValueError):
    """Base class for every validation error raised by the package."""


class MalformedRow(EconDataError):
    def __init__(self, line, reason, source=None):
        self.line = line
        self.reason = reason
        self.source = source
        where = f"{source}:" if source else "line "
        super().__init__(f"{where}{line}: {reason}")


class DuplicateKey(MalformedRow):
    pass


class BadHeader(MalformedRow):
    pass


class EmptySeries(EconDataError):
    pass


class UnknownCurrency(EconDataError):
    pass


class UnmappedHotel(EconDataError):
    pass


class TooShort(EconDataError):
    pass


class AllDegenerate(EconDataError):
    pass


class NegativeInput(EconDataError):
    pass


class EmptyPeriod(EconDataError):
    pass


class NotNormalized(EconDataError):
    pass


class ShapeMismatch(EconDataError):
    pass


class DistrictMismatch(EconDataError):
    pass


class ZeroTotal(EconDataError):
    pass


class UnknownAirport(EconDataError):
    pass
