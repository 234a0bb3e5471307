"""Exception types raised across the package."""


class AnchorError(ValueError):
    """Base class for all domain errors."""


class InvalidDimension(AnchorError):
    pass


class OutsidePolytope(AnchorError):
    pass


class InvalidLaw(AnchorError):
    """Weights or atoms do not describe a valid anchored law."""


class InvalidChannel(AnchorError):
    pass


class InvalidComposition(AnchorError):
    pass


class SingularPair(AnchorError):
    """Row j charges an output that row i does not (no likelihood ratio)."""


class OnFiberKernel(AnchorError):
    pass


class InvalidBase(AnchorError):
    pass


class BoundaryBase(AnchorError):
    pass


class NotRealizable(AnchorError):
    pass


class TooLarge(AnchorError):
    pass


class NotFeasible(AnchorError):
    pass


class InvalidParameter(AnchorError):
    pass


class OutOfRegime(AnchorError):
    pass


class SingularCovariance(AnchorError):
    pass
