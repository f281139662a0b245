"""Exception types shared across the pipeline."""


class GrowSegError(Exception):
    """Base class for all pipeline errors."""


class ParseError(GrowSegError):
    """A header or serialized artifact could not be parsed."""


class SizeError(GrowSegError):
    """A data file's byte length disagrees with its header."""


class EmptySeedsError(GrowSegError):
    """No seed regions remain to grow from."""


class EmptyInputError(GrowSegError):
    """An operation received an empty input collection."""


class DependencyError(GrowSegError):
    """A stage was invoked before its prerequisite artifacts exist."""


class ConfigError(GrowSegError):
    """Invalid or incomplete pipeline configuration."""
