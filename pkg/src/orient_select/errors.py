class OrientSelectError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(OrientSelectError):
    """Invalid configuration: bad weights, unknown scale, malformed config file."""


class DataError(OrientSelectError):
    """Input data cannot be used: unparsable file, empty graph, unreachable target."""


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class EmptyGraphError(DataError):
    pass


class NoRouteError(DataError):
    pass


class PipelineError(OrientSelectError):
    """A pipeline stage failed; ``stage`` names it and ``cause`` holds the original error."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
