"""Error types shared across the package."""


class SigmakError(Exception):
    """Base class for package errors."""


class DomainError(SigmakError, ValueError):
    """Inputs outside an operation's stated domain (bad k, empty cap family, ...)."""


class ConeViolationError(DomainError):
    """Eigenvalue or curvature vector outside the required positivity cone."""


class SpacelikeViolationError(SigmakError, ValueError):
    """A gradient reached or exceeded the light-cone slope |Du| = 1."""


class AdmissibilityError(SigmakError, RuntimeError):
    """A solver iterate left the admissible (convexity) set; carries a witness node."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConvergenceError(SigmakError, RuntimeError):
    """An iteration reached its budget without meeting the tolerance."""


class ConfigError(SigmakError, ValueError):
    """Malformed scenario or problem configuration."""
