"""Exception hierarchy shared across the package."""


class ClockError(Exception):
    """Base class for every error raised by clockcdt."""


class MalformedDocument(ClockError):
    pass


class UnsupportedCommand(MalformedDocument):
    pass


class EmptyDrawing(ClockError):
    pass


class DegenerateInput(ClockError):
    pass


class OutOfRange(ClockError, ValueError):
    pass


class RangeViolation(OutOfRange):
    pass


class AmbiguousHands(ClockError):
    pass


class MissingHands(ClockError):
    pass


class InvalidDefect(ClockError, ValueError):
    pass


class ConfigInvalid(ClockError, ValueError):
    pass


class TransportFailure(ClockError):
    pass


class AuthMissing(ClockError):
    pass


class NoDrawingFound(ClockError):
    pass


class EmptyResults(ClockError):
    pass
