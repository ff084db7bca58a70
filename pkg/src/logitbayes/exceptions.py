"""Exception types raised across the package."""


class LogitBayesError(Exception):
    """Base class for every error raised by logitbayes."""


class FitError(LogitBayesError, ValueError):
    """A model could not be fitted from the supplied data."""


class ParameterError(LogitBayesError, ValueError):
    """An argument is outside its admissible domain."""


class NotFittedError(LogitBayesError, RuntimeError):
    """A scoring rule was requested that the scorer was not fitted for."""


class ParseError(LogitBayesError, ValueError):
    """A data file is malformed. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ModelFormatError(LogitBayesError, ValueError):
    """A serialized model is unreadable, of an unsupported version or inconsistent."""
