"""Exception hierarchy.

Each class carries the CLI exit code used when it escapes a command.
"""


class LyapspecError(Exception):
    exit_code = 1


class ConfigError(LyapspecError):
    exit_code = 2


class InvalidMapError(LyapspecError):
    exit_code = 2


class PreconditionError(LyapspecError):
    """An operation was called outside its documented domain."""

    exit_code = 2

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NumericDegradation(LyapspecError):
    """Solver residuals, dropped mass or convexity violations beyond tolerance."""

    exit_code = 3


class OrbitEscape(NumericDegradation):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class SearchFailure(LyapspecError):
    """A bounded search (bridges, schedules) found nothing. Not a proof of absence."""

    exit_code = 4
