"""Exception types shared across the package."""


class GraphRegError(Exception):
    """Base class for all graphreg errors."""


class DimensionMismatch(GraphRegError):
    """A vector's length does not match the graph or grid it is applied to."""


class UnsupportedTrendManifoldPair(GraphRegError):
    """The trend has no analytic Laplacian on the requested manifold."""


class UnsupportedManifold(GraphRegError):
    """The operation is only defined on a subset of the model manifolds."""


class InvalidLabelCount(GraphRegError):
    """Label count q must satisfy 1 <= q <= n."""


class InvalidK(GraphRegError):
    """k-NN parameter outside [1, q]."""


class BracketFailure(GraphRegError):
    """Root bracket endpoints have the same sign; the loss model is broken."""


class CgStall(GraphRegError):
    """Conjugate gradient hit its iteration cap before reaching tolerance."""


class NewtonStall(GraphRegError):
    """Backtracking found no objective decrease at the minimum step size."""


class TooLargeForDense(GraphRegError):
    """Dense materialization refused above the size guard."""


class MalformedCsv(GraphRegError):
    """CSV contents do not match the expected schema."""


class ParseError(GraphRegError):
    """Configuration text is not well-formed or contains unknown fields."""


class ValidationError(GraphRegError):
    """Configuration values violate a documented constraint."""
