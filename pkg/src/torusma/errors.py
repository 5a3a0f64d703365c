"""Exception hierarchy for the torusma package."""


class TorusMAError(Exception):
    """Base class for all torusma domain errors."""


class SingularMatrix(TorusMAError):
    """Frame matrix is not invertible (or numerically too close to singular)."""


class ExhaustedRetries(TorusMAError):
    """Random frame sampler failed to produce an admissible frame; indicates a bug."""


class InvalidFrame(TorusMAError):
    """Frame data violates the algebraic constraints required by its case."""


class ExplicitCaseG33Zero(TorusMAError):
    """G^3_3 vanishes: the nil reduction does not apply, use the explicit branch."""


class NotExplicitCase(TorusMAError):
    """The explicit branch was requested for a frame with G^3_3 != 0 (or wrong case)."""


class DegenerateE2(TorusMAError):
    """(G^2_3)^2 + (G^2_4)^2 vanishes: the sol reduction divides by this quantity."""


class GridMismatch(TorusMAError):
    """Fields that must share a grid were built on different grids."""


class UnnormalizedF(TorusMAError):
    """mean(exp(F)) != 1: the right-hand side must be normalized first."""


class NonzeroMeanU(TorusMAError):
    """The potential u must have zero mean over the torus."""


class PeriodicityCheckFailed(TorusMAError):
    """A reconstructed one-form component fails its wraparound consistency check."""


class LineSearchFailed(TorusMAError):
    """No admissible Newton step length; the continuation step must shrink."""


class LinearSolveFailed(TorusMAError):
    """The preconditioned Krylov solve for the Newton correction stalled."""


class HomotopyFailed(TorusMAError):
    """The continuation step underflowed; carries the last good state.

    Attributes
    ----------
    last_tau : float
        Last homotopy parameter value at which a solution was obtained.
    last_field : TorusField
        The converged iterate at ``last_tau``.
    stages : list
        Per-stage records accumulated before the failure.
    """

    def __init__(self, message, last_tau=None, last_field=None, stages=None):
        super().__init__(message)
        self.last_tau = last_tau
        self.last_field = last_field
        self.stages = stages or []
