"""Exception hierarchy for the integration engine."""


class GeometricCalculusError(Exception):
    """Base class for every error raised by the engine."""


class AlgebraMismatch(GeometricCalculusError):
    """Operands belong to different algebras."""


class InvalidDimension(GeometricCalculusError, ValueError):
    """Requested algebra dimension is outside the supported range."""


class NotInvertible(GeometricCalculusError):
    """A A~ is not a nonzero scalar within tolerance."""


class DomainError(GeometricCalculusError):
    """Input lies outside the domain of an operation or field."""


class OffManifold(DomainError):
    """A point violates the constraints of the manifold it was evaluated on."""


class OnBranchCut(DomainError):
    """Evaluation requested on the branch cut of a multivalued antiderivative."""


class StepUnderflow(GeometricCalculusError):
    """Finite-difference step collapsed below the resolution of the point."""


class SingularMap(GeometricCalculusError):
    """Jacobian determinant too small to invert."""


class DegenerateMeasure(GeometricCalculusError):
    """Chart measure blade vanishes inside a patch."""


class NonConvergence(GeometricCalculusError):
    """Refinement hit its cell cap before reaching the requested tolerance."""


class UnknownEntry(GeometricCalculusError, KeyError):
    """No antiderivative entry or scenario with the requested name."""


class RadialIntegrationError(DomainError):
    """The radial integrand could not be integrated at a sampled radius."""


class BoundUnavailable(GeometricCalculusError):
    """Sampled integrand values are not finite, so no incision bound exists."""


class ChainInvalid(GeometricCalculusError):
    """An integration chain violates continuity, consistency or structure."""


class OrientationError(GeometricCalculusError):
    """Terminal signs disagree with the boundary orientation rule."""


class ParameterError(GeometricCalculusError, ValueError):
    """Scenario or command parameters out of range."""


class VerificationError(GeometricCalculusError):
    """A closed form disagrees with its numerical cross-check."""
