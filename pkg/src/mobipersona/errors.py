"""Exception types raised across the pipeline."""


class MobiPersonaError(Exception):
    """Base class for all package errors."""


class ParseError(MobiPersonaError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class DuplicateId(MobiPersonaError, ValueError):
    pass


class ConfigError(MobiPersonaError, ValueError):
    pass


class InvalidParam(MobiPersonaError, ValueError):
    pass


class DegenerateSplit(MobiPersonaError, ValueError):
    pass


class BadResponse(MobiPersonaError, ValueError):
    pass


class ZeroVariance(MobiPersonaError, ValueError):
    pass


class EmptyPopulation(MobiPersonaError, ValueError):
    pass


class EmptyCohort(MobiPersonaError, ValueError):
    pass


class EmptyStratum(MobiPersonaError, ValueError):
    pass


class AllMissingColumn(MobiPersonaError, ValueError):
    pass


class NoPlaces(MobiPersonaError, ValueError):
    pass


class Insufficient(MobiPersonaError, ValueError):
    pass


class SingleClass(MobiPersonaError, ValueError):
    pass


class SchemaMismatch(MobiPersonaError, ValueError):
    pass


class DegenerateTruth(MobiPersonaError, ValueError):
    pass


class TooSmall(MobiPersonaError, ValueError):
    pass


class UnknownFeature(MobiPersonaError, KeyError):
    pass
