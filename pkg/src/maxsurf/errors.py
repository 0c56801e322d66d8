"""Exception types shared across the package."""


class MaxsurfError(Exception):
    """Base class for all package-specific errors."""


class DomainError(MaxsurfError, ValueError):
    """Input outside the mathematical domain of an operation."""


class PoleError(MaxsurfError):
    """Gauss map hit a zero/pole where 1/g or g is required."""


class QuadratureError(MaxsurfError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ConfigError(MaxsurfError):
    """Required configuration (e.g. a mirror involution) is missing."""


class UnsupportedError(MaxsurfError):
    """The model does not provide the requested quantity."""


class AdmissibilityError(MaxsurfError):
    """Boundary data violates the Lipschitz admissibility condition."""

    def __init__(self, msg, pair=None, excess=None):
        super().__init__(msg)
        self.pair = pair
        self.excess = excess


class ConvergenceError(MaxsurfError):
    """Iteration budget exhausted before reaching tolerance."""


class SingularError(MaxsurfError):
    """Operation requires a nonsingular graph but the clamp triggered."""


class ExactnessError(MaxsurfError):
    """Closed-loop residual of a 1-form exceeded tolerance."""


class OverlapError(MaxsurfError):
    """Graph supports are not pairwise disjoint."""


class MonotonicityError(MaxsurfError, ValueError):
    """A tangent-angle function that must increase does not."""


class UnwrapError(MaxsurfError):
    """Angle unwrapping failed (jump above pi between samples)."""


class ShortArcError(MaxsurfError, ValueError):
    """Too few samples to estimate an asymptotic direction."""


class DegenerateError(MaxsurfError):
    """Induced metric is not positive definite where it must be."""


class HypothesisError(MaxsurfError):
    """An analytic hypothesis required by a check fails on the input."""
