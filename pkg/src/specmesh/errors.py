"""Exception types shared across the package."""


class SpecmeshError(Exception):
    """Base class for all package errors."""


class ParseError(SpecmeshError):
    """A mesh or container file is malformed."""


class NonTriangulable(ParseError):
    """A face record has fewer than three vertices."""


class IndexOutOfRange(SpecmeshError):
    """A vertex, face, shape or component index is out of bounds."""


class ConnectivityMismatch(SpecmeshError):
    """Two objects bound to different face tables were combined."""


class DegenerateDataset(SpecmeshError):
    """The dataset collapses to a point, so no finite scale exists."""


class DegenerateTriangle(SpecmeshError):
    """A face references the same vertex more than once."""


class DimensionMismatch(SpecmeshError):
    """Array dimensions do not agree."""


class ConvergenceFailure(SpecmeshError):
    """The iterative eigensolver hit its iteration cap."""


class SingularNeighborhood(SpecmeshError):
    """A vertex has no incident edges, so no local transform exists."""


class SolveFailure(SpecmeshError):
    """A sparse factorization or solve failed."""


class StatsMismatch(SpecmeshError):
    """Feature statistics do not match the data they are applied to."""


class NoInteriorEdges(SpecmeshError):
    """The mesh has no edge shared by two faces."""


class InconsistentWinding(SpecmeshError):
    """Face orientations disagree across an edge."""
