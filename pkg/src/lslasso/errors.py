"""Exception types and error formatting for lslasso."""

from typing import Optional


class LslassoError(Exception):
    """Base class of every error raised by lslasso"""


class DomainError(LslassoError, ValueError):
    """An input lies outside the admissible domain of an operation"""


class UnsupportedError(LslassoError, ValueError):
    """The operation is not defined for the given family, order or mode"""


class DegenerateError(LslassoError, ArithmeticError):
    """A computed quantity is numerically degenerate (non-finite, below floor)"""


class InfeasibleError(LslassoError, ValueError):
    """A parameter or design violates the parameter-domain assumption"""


class ReportError(LslassoError, OSError):
    """A report file could not be written; the message names the path"""


class ConfigError(LslassoError, ValueError):
    """Invalid run configuration; carries the offending key and line"""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        super().__init__(message)

    def __str__(self) -> str:
        where = []
        if self.key is not None:
            where.append(f"key '{self.key}'")
        if self.line is not None:
            where.append(f"line {self.line}")
        message = super().__str__()
        return f"{', '.join(where)}: {message}" if where else message


def extract_error_info(e: BaseException) -> str:
    """
    Extracts a one-line diagnostic from an exception.

    Returns the key/line annotated message for configuration errors, the class
    name and message for lslasso errors, and falls back to the string
    representation of any other exception.
    """
    if isinstance(e, ConfigError):
        return f"configuration error ({e})"
    if isinstance(e, LslassoError):
        return f"{type(e).__name__}: {e}"
    return str(e) or type(e).__name__
