"""Shared exception types."""


class BundlekitError(Exception):
    """Base class for all package errors."""


class ConfigError(BundlekitError, ValueError):
    """Invalid generation or benchmark configuration."""


class ParseError(BundlekitError, ValueError):
    """Malformed document; carries a line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ResourceLimitError(BundlekitError, RuntimeError):
    """An explicit work guard (iterations, nodes, enumeration size) was exceeded."""


class SolveError(BundlekitError, RuntimeError):
    """A solver reached a state the caller cannot recover from."""
