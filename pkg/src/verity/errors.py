"""Exception hierarchy shared across the package."""


class VerityError(Exception):
    """Base class for all package errors."""


class ValidationError(VerityError):
    """Input violates a documented precondition or invariant."""


class KGFormatError(VerityError):
    """Malformed knowledge-graph file; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DatasetError(VerityError):
    """Malformed dataset record; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TransportError(VerityError):
    """Retryable backend failure (network, 5xx, rate limit)."""


class GatewayHardError(VerityError):
    """Non-retryable gateway failure; the current claim is abandoned."""


class ReplayMissError(GatewayHardError):
    """Replay backend has no recorded response for a request hash."""
