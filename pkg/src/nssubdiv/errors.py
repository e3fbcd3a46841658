"""Exception types raised across the package."""


class SubdivisionError(Exception):
    """Base class for all errors raised by nssubdiv."""


# mesh
class NonManifold(SubdivisionError):
    pass


class InconsistentOrientation(SubdivisionError):
    pass


class NonQuadFace(SubdivisionError):
    pass


class BoundaryUnsupported(SubdivisionError):
    pass


class InsufficientRegularCollar(SubdivisionError):
    pass


# symbols
class NotDivisible(SubdivisionError):
    pass


class ComplexCoefficients(SubdivisionError):
    pass


# schemes
class UnsupportedValence(SubdivisionError):
    pass


class NonConstantCosetSums(SubdivisionError):
    pass


class InvalidParameter(SubdivisionError, ValueError):
    pass


# localmatrix
class ShapeMismatch(SubdivisionError, ValueError):
    pass


class SingularMatrix(SubdivisionError):
    pass


class DefectiveSubdominant(SubdivisionError):
    pass


class GateFailed(SubdivisionError):
    pass


class NotConverged(SubdivisionError):
    pass


class AllBelowNoiseFloor(SubdivisionError):
    pass


# analyzer
class IncompatibleSchemes(SubdivisionError):
    pass


class DegenerateNormals(SubdivisionError):
    pass
