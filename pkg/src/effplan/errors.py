"""Exception types raised by the geometry and planning routines."""


class GeometryError(Exception):
    """Base class for numerical geometry failures."""


class ConstraintViolation(GeometryError, ValueError):
    """A point (or tangent vector) does not satisfy its manifold's constraint."""


class LeftManifold(GeometryError):
    """A geodesic left the closed hemisphere before reaching its endpoint."""


class IntegrationFailure(GeometryError):
    """Step refinement could not bring the speed drift under its bound."""


class CutLocus(GeometryError):
    """The target lies (within tolerance) on the cut locus of the base point.

    The minimal geodesic is not unique there, so the logarithm is ambiguous and
    the caller has to fall back on another local section.
    """


class NoConvergence(GeometryError):
    def __init__(self, message, best_residual=float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


class DispatchFailure(GeometryError):
    """No section of a motion planner accepted a pair."""

    def __init__(self, message, p=None, q=None):
        super().__init__(message)
        self.p = p
        self.q = q


class ConfigError(ValueError):
    pass
