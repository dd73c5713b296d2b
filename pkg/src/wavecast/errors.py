"""Exception hierarchy shared across the package.

The command-line tool maps :class:`ConfigError` (and argparse usage
problems) to exit code 1 and every other :class:`WavecastError` to exit
code 2, so parsers and numeric kernels should raise the most specific
subclass that applies.
"""


class WavecastError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(WavecastError):
    """Malformed text input. Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FetchError(WavecastError):
    """Network retrieval failed (timeout, connection error, bad status)."""


class FormatError(WavecastError):
    """A binary or structured file violates its format contract."""


class ShapeError(WavecastError):
    """Array dimensions are inconsistent with the requested operation."""


class DomainError(WavecastError):
    """Numeric input lies outside the operation's domain."""


class ConfigError(WavecastError):
    """Invalid configuration, argument combination, or parameter name."""


class TrainingError(WavecastError):
    """Optimization failed, for example a non-finite loss."""
