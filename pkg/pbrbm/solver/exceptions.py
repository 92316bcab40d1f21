"""Errors raised by the numerical core.

Everything the solver signals derives from :class:`SolverError`, so callers
(the management command in particular) can map a whole family to one exit
status. Configuration problems are reported separately as :class:`ConfigError`.
"""


class SolverError(Exception):
    """Base class for numerical failures."""


class NotOnBoundary(SolverError):
    """A boundary-only operation received a point off the boundary."""


class SingularKernel(SolverError):
    """Coulomb kernel evaluated at its singularity."""


class ReflectionFailure(SolverError):
    """Boundary handling did not land inside the domain within the cap."""


class InvalidBatchSize(SolverError):
    """Batch size does not divide the particle count, or is below 2."""


class NewtonDivergence(SolverError):
    """Newton iteration stopped before reaching the residual tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class CoverageError(SolverError):
    """Samples fall outside the histogram bin range."""


class DegenerateReference(SolverError):
    """Reference integral used as a relative-error denominator is zero."""


class NonMonotoneVoltage(SolverError):
    """Capacitance finite differences over a repeated or reversed voltage."""


class ConfigError(Exception):
    """Invalid experiment configuration.

    :ivar detail: key path -> messages, in the shape DRF serializers report.
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail or {}
