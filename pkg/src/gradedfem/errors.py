"""Exception types raised by the mesh, assembly and solver layers."""


class GradedFemError(Exception):
    """Base class for all errors raised by this package."""


class ConfigParseError(GradedFemError):
    """A study configuration file could not be parsed."""


class FractureNotRepresentable(GradedFemError):
    """A conforming mesh template cannot align its edges with a fracture."""


class SingularPointNotAVertex(GradedFemError):
    """A configured singular point does not coincide with a mesh vertex."""


class TwoSingularPointsInOneTriangle(GradedFemError):
    """A triangle owns more than one singular vertex."""


class BrokenLineage(GradedFemError):
    """Parent links between refinement levels are inconsistent."""


class InvalidMesh(GradedFemError):
    """A mesh violates its structural invariants."""


class KappaOutOfRange(GradedFemError):
    """A grading parameter violates its admissible range."""


class UnsupportedDegree(GradedFemError):
    """Element degree outside {1, 2}."""


class DegenerateElement(GradedFemError):
    """An element has zero or negative Jacobian."""


class Breakdown(GradedFemError):
    """Conjugate gradients detected a non-SPD matrix."""


class DimensionMismatch(GradedFemError):
    """Operands of a linear-algebra operation have incompatible shapes."""


class NotNested(GradedFemError):
    """Two grids passed to a nested operation are not parent and child."""


class NonpositiveDifference(GradedFemError):
    """A convergence rate was requested from non-positive differences."""
