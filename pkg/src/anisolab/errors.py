"""Exception types shared across the package."""


class AnisolabError(Exception):
    """Base class for all package errors."""


class ZeroVector(AnisolabError):
    """Norm evaluation requested at (numerically) zero; caller must regularize."""


class NonConvergence(AnisolabError):
    """An iterative solve failed its tolerance; carries the last residual/value."""

    def __init__(self, message, last_value=None):
        super().__init__(message)
        self.last_value = last_value


class DegenerateHessian(AnisolabError):
    """Transverse Hessian eigenvalue below tolerance: norm family inadmissible."""


class NonFiniteDual(AnisolabError):
    """Dual norm evaluation returned a non-finite value on a quadrature node."""


class GridTooCoarse(AnisolabError):
    """Radial grid has too few nodes for the requested stencil."""


class MeshTooCoarse(AnisolabError):
    """Planar mesh too coarse for the requested cross-check."""


class UnresolvedBoundary(AnisolabError):
    """Mesh target size too coarse to resolve the domain geometry."""


class BlowUp(AnisolabError):
    """ODE solution left the admissible range before reaching the target radius."""

    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius


class StepFailure(AnisolabError):
    """Continuation step failed at minimum step size; carries the last good point."""

    def __init__(self, message, last_point=None):
        super().__init__(message)
        self.last_point = last_point


class SingularMassMatrix(AnisolabError):
    """Mass matrix of a discrete eigenproblem is not positive definite."""


class InnerSolveFailure(AnisolabError):
    """Inner Newton solve of the monotone iteration failed."""

    def __init__(self, message, iterate_index=None):
        super().__init__(message)
        self.iterate_index = iterate_index


class IndefiniteMass(AnisolabError):
    """Assembled mass form is indefinite; signals an assembly bug."""


class PreconditionUnverified(AnisolabError):
    """A comparison-principle precondition failed to verify numerically."""


class InvalidDimension(AnisolabError):
    """Operation undefined in the requested dimension."""


class ParseError(AnisolabError):
    """Config file is malformed."""


class ValidationError(AnisolabError):
    """Config contents fail validation; message names the offending field."""


class MissingData(AnisolabError):
    """Requested output (plot/table) has no backing data."""
