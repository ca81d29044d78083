"""Exception types shared across the package."""


class EntpercError(Exception):
    """Base class for all package-specific errors."""


class ZeroPointError(EntpercError):
    """Operation undefined at the lattice origin."""


class DimensionMismatchError(EntpercError):
    """Points of different dimension were mixed."""


class NotDescendingError(EntpercError):
    """A set expected to be descending-closed is not."""


class BudgetExceededError(EntpercError):
    """An enumeration exceeded its node budget."""


class InfeasibleQError(EntpercError):
    """Pair-empirical parameters violate the simplex constraints."""


class BoundaryPointError(EntpercError):
    """Derivative requested where a log argument vanishes."""


class EmptyIntersectionError(EntpercError):
    """A parameter block does not meet the feasible region."""


class EmptySetError(EntpercError):
    """Operation undefined on an empty set."""


class DivergentParametersError(EntpercError):
    """Series parameters outside the geometric-convergence regime."""


class MissingCertificateError(EntpercError):
    """A certified lower bound required by the computation is absent."""


class RadiusTooSmallError(EntpercError):
    """Search window does not cover the constructed volume."""


class NotThreeDimensionalError(EntpercError):
    """Boundary-complex extraction is implemented for d = 3 only."""
