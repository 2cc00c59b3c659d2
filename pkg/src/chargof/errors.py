"""Exception hierarchy with machine-readable codes and CLI exit codes."""


class ChargofError(Exception):
    """Base class; `code` is stable and machine readable."""

    code = "Error"
    exit_code = 1

    def to_json(self):
        return {"code": self.code, "message": str(self)}


class UsageError(ChargofError):
    exit_code = 2


class DataError(ChargofError):
    exit_code = 3


class NumericalError(ChargofError):
    exit_code = 4


class IOFailure(ChargofError):
    exit_code = 5


class UnknownSpec(UsageError):
    code = "UnknownSpec"


class InvalidQuantile(UsageError):
    code = "InvalidQuantile"


class TooCoarse(UsageError):
    code = "TooCoarse"


class PreconditionError(UsageError):
    code = "Precondition"


class InsufficientReps(UsageError):
    code = "InsufficientReps"


class InsufficientDraws(UsageError):
    code = "InsufficientDraws"


class ArityError(UsageError):
    code = "ArityError"


class MissingSpectrum(UsageError):
    code = "MissingSpectrum"


class NoEffectExpected(UsageError):
    code = "NoEffectExpected"


class TooLargeForNaive(UsageError):
    code = "TooLargeForNaive"


class EmptyInput(DataError):
    code = "EmptyInput"


class ParseError(DataError):
    code = "ParseError"


class InvalidValue(DataError):
    code = "InvalidValue"


class SupportError(DataError):
    code = "SupportError"


class DegenerateSample(DataError):
    code = "DegenerateSample"


class SampleTooSmall(DataError):
    code = "SampleTooSmall"


class NumericalFailure(NumericalError):
    code = "NumericalFailure"


class CacheError(IOFailure):
    code = "CacheError"
