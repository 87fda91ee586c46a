"""Exception hierarchy shared by every douglaskit module."""

from __future__ import annotations


class DouglasKitError(Exception):
    """Base class for all library errors."""


class ShapeMismatchError(DouglasKitError, ValueError):
    """Operands live on incompatible algebras, modules or submodules."""


class NotSelfAdjointError(DouglasKitError, ValueError):
    """Self-adjointness defect exceeds the configured tolerance."""


class NonPositiveError(DouglasKitError, ValueError):
    """An argument required to be positive is not."""


class ZeroElementError(DouglasKitError, ValueError):
    """The operation is undefined at the zero element."""


class HypothesisViolatedError(DouglasKitError):
    """The hypotheses of a verifier do not hold for the given inputs."""


class NotMajorizedError(DouglasKitError):
    """No finite lambda with T'T'* <= lambda TT* exists."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class NoSolutionError(DouglasKitError):
    """The equation T' = TX has no solution; carries a range witness."""

    def __init__(self, message: str, witness=None, residual: float | None = None):
        super().__init__(message)
        self.witness = witness
        self.residual = residual


class CrossCheckError(DouglasKitError):
    """Two independent computations of the same quantity disagree."""


class FormatError(DouglasKitError, ValueError):
    """Malformed JSON/CSV payload."""
