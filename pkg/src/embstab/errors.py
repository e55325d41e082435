class EmbstabError(Exception):
    """Base class for toolkit errors."""


class ConfigurationError(EmbstabError, ValueError):
    pass


class ParseError(EmbstabError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientDataError(EmbstabError, ValueError):
    pass


class ConvergenceError(EmbstabError, RuntimeError):
    pass
