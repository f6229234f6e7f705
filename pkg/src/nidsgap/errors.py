"""Exception hierarchy shared by all pipeline phases."""


class AuditorError(Exception):
    """Base class. ``exit_code`` is what the CLI returns when this escapes."""

    exit_code = 2


class MalformedBundle(AuditorError):
    pass


class ConflictingNames(AuditorError):
    # only ever logged, never raised by merge_matrices; kept for callers who want strictness
    pass


class UnknownEntity(AuditorError):
    pass


class UnknownCombiner(AuditorError):
    exit_code = 1


class SchemaViolation(AuditorError):
    pass


class DuplicateName(AuditorError):
    pass


class InvalidScore(AuditorError):
    pass


class ServiceUnavailable(AuditorError):
    exit_code = 3


class MalformedResponse(AuditorError):
    pass


class EmptyMatrix(AuditorError):
    pass


class UnknownDataset(AuditorError):
    pass


class KeyMismatch(AuditorError):
    pass


class IoFailure(AuditorError):
    pass
