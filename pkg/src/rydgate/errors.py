"""Exception types shared across the package."""


class RydgateError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(RydgateError, ValueError):
    """Invalid physical parameters or malformed configuration."""


class CriticalPointError(RydgateError, ValueError):
    """Requested quantity is undefined at a spectral critical point."""


class SingularCaseError(RydgateError, ValueError):
    """Formula is singular here; a dedicated special case applies instead."""


class FullTransferError(RydgateError, ValueError):
    """The drive leaves no population in the tracked state."""


class CubicDomainError(RydgateError, ValueError):
    """Closed-form eigenvalue intermediates left their validity domain."""


class IntegrationError(RydgateError, RuntimeError):
    """Time propagation failed; carries the time where stepping stopped."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class BracketError(RydgateError, RuntimeError):
    """Root bracketing failed; carries the scanned (x, value) pairs."""

    def __init__(self, message: str, scan=None):
        super().__init__(message)
        self.scan = list(scan) if scan is not None else []


class UnwrapError(RydgateError, RuntimeError):
    """Phase samples too sparse to unwrap reliably, even after refinement."""
