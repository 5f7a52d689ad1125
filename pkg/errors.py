"""Exception types shared by the library modules and mapped to CLI exit codes."""

from typing import Optional


class ZetaError(Exception):
    """Base class for all errors raised by this package."""


class GraphFormatError(ZetaError, ValueError):
    """Invalid graph, voltage graph, coloring, permutation table or file."""


class DomainError(ZetaError, ValueError):
    """A value lies outside the region where an operation is defined."""


class SeriesModeError(ZetaError, TypeError):
    """Exact and float series were combined."""


class IdentityFailure(ZetaError, AssertionError):
    def __init__(self, identity: str, detail: Optional[str] = None) -> None:
        self.identity = identity
        self.detail = detail or ""
        message = identity if not detail else f"{identity}: {detail}"
        super().__init__(message)
