"""Exception types shared across the package."""


class ElasticSGDError(Exception):
    """Base class for all library errors."""


class ShapeError(ElasticSGDError, ValueError):
    """Operands have incompatible shapes or lengths."""


class InputError(ElasticSGDError, ValueError):
    """A value is outside an operation's domain (bad label, bad count, ...)."""


class DataFormatError(ElasticSGDError, ValueError):
    """A binary file does not match its declared format.

    ``offset`` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class StaleCacheError(ElasticSGDError, RuntimeError):
    """A backward pass was given a cache produced by a different forward pass."""


class SchedulingError(ElasticSGDError, RuntimeError):
    """The event engine cannot make progress (e.g. dequeue from an empty queue)."""


class ConfigError(ElasticSGDError, ValueError):
    """An experiment config file could not be parsed or validated.

    ``section`` / ``key`` identify the offending entry when known.
    """

    def __init__(self, message: str, section: str | None = None, key: str | None = None):
        where = ""
        if section is not None:
            where = f" [section {section!r}" + (f", key {key!r}]" if key else "]")
        super().__init__(message + where)
        self.section = section
        self.key = key
