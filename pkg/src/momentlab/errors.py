"""Exception types shared across the library."""


class MomentlabError(Exception):
    """Base class for all library errors."""


class PoleError(MomentlabError):
    """Evaluation requested at (or numerically on top of) a pole."""


class DomainError(MomentlabError):
    """Argument outside the supported domain of an operation."""


class ConvergenceError(MomentlabError):
    """Series or sum requested outside its region of convergence."""


class CapacityError(MomentlabError):
    """Requested table or enumeration exceeds a configured size bound."""


class SingularFactorError(MomentlabError):
    """A local factor of a divisor sum degenerates; use a limit variant."""


class CoverageError(MomentlabError):
    """Coefficient table or spectral catalog does not cover the request."""


class SchemaError(MomentlabError):
    """Input file does not match the expected schema."""


class HeckeViolationError(MomentlabError):
    """Loaded eigenvalue data violates the Hecke composition law."""

    def __init__(self, message, pairs=None):
        super().__init__(message)
        self.pairs = list(pairs or [])


class TailBoundError(MomentlabError):
    """Sampled integrand decay contradicts the declared decay profile."""


class PathCollisionError(MomentlabError):
    """A contour parameter forces a pole onto the integration path."""


class LimitInstabilityError(MomentlabError):
    """A numerical limit failed its extrapolation consistency check."""
