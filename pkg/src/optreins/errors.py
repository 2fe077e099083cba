"""Exception hierarchy shared by every module in the package."""


class ReinsuranceError(Exception):
    """Base class for all errors raised by optreins."""


class InvalidParameter(ReinsuranceError, ValueError):
    """A parameter lies outside its admissible range."""


class NonMonotoneTable(InvalidParameter):
    """A custom distortion table decreases somewhere."""


class DivergentIntegral(ReinsuranceError):
    """The distorted tail integral does not converge."""


class NumericalFailure(ReinsuranceError):
    """Quadrature could not reach the requested tolerance."""


class ProfileIndeterminate(ReinsuranceError):
    """The ratio of distortions is 0/0 on too large a share of (0, 1)."""


class UnsupportedShape(ReinsuranceError):
    """The ratio of distortions crosses the threshold more than twice."""


class Infeasible(ReinsuranceError):
    """No multiplier in the search box produced a feasible contract."""


class GridTooLarge(ReinsuranceError):
    """A brute-force grid would need too many objective evaluations."""
