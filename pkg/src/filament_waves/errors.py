"""Exception types raised across the package.

Each error maps to a CLI exit code: domain errors exit with 3, numerical
failures with 4.
"""


class FilamentError(Exception):
    """Base class for all package errors."""

    exit_code = 4


class DomainError(FilamentError):
    """Inputs lie outside the domain where the model or construction applies."""

    exit_code = 3


class NumericalFailure(FilamentError):
    """An iterative method failed to produce an acceptable answer."""

    exit_code = 4


class NonPositiveAmplitude(DomainError):
    """The lattice site and frequency give a2inv <= 0, so no valid distance a0 exists."""


class ResonantSite(DomainError):
    """The kernel at a0 contains sites other than the seeded ones."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegenerateFrequency(DomainError):
    """The traveling-wave frequency radicand 1 + (-1)^l a^-2 is not positive."""


class AmplitudeTooLarge(DomainError):
    """sup|u| reached the analyticity guard of the nonlinearity."""


class CollisionDetected(DomainError):
    """min|w1| fell below the collision guard."""


class SingularSite(NumericalFailure):
    """A non-kernel lattice site has a zero eigenvalue inside the truncation."""


class ContractionFailed(NumericalFailure):
    """The range-equation fixed-point iteration diverged or stalled."""


class RootNotFound(NumericalFailure):
    """The scalar bifurcation equation could not be solved for a."""


class NewtonFailed(NumericalFailure):
    """Newton's method for the traveling-wave profile did not converge."""


class StepRejected(NumericalFailure):
    """An implicit time step failed to converge."""


class BranchTruncated(NumericalFailure):
    """Continuation stopped early; ``branch`` holds the points found so far."""

    exit_code = 0

    def __init__(self, message, branch=None):
        super().__init__(message)
        self.branch = branch
