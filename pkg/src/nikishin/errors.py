"""Exception hierarchy shared by all modules of the package."""


class NikishinError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(NikishinError, ValueError):
    """Invalid or degenerate configuration input."""


class EvaluationOnSupportError(NikishinError, ValueError):
    """A Cauchy transform was requested at a point of the support hull."""


class OverlappingHullsError(NikishinError, ValueError):
    """Two measures that must live on disjoint intervals overlap."""


class QuadratureNonConvergence(NikishinError, ArithmeticError):
    """Node count reached its cap before successive values agreed."""


class ContourCrossesSingularity(NikishinError, ArithmeticError):
    """No admissible contour separates the hull from a singular point."""


class SignIndeterminate(NikishinError, ArithmeticError):
    """A quantity that must have constant sign changed sign."""


class LaurentExtractionUnstable(NikishinError, ArithmeticError):
    """Laurent coefficients at infinity could not be resolved reliably."""


class SingularSystem(NikishinError, ArithmeticError):
    """The orthogonality system is singular at every tried precision."""


class ResidualTooLarge(NikishinError, ArithmeticError):
    """A computed object violates its defining relations beyond tolerance."""


class IndexOutOfClass(NikishinError, ValueError):
    """The multi-index lies outside the class the construction supports."""


class ImbalanceBoundExceeded(NikishinError, ValueError):
    """A multi-index path left the configured imbalance bound."""


class ZeroCountMismatch(NikishinError, ArithmeticError):
    """The number of zeros found differs from the predicted count."""


class FixedPointNonConvergence(NikishinError, ArithmeticError):
    """The boundary-value fixed-point iteration hit its iteration cap."""


class WeightNonpositive(NikishinError, ValueError):
    """A weight that must be strictly positive is not."""


class ProductDeviation(NikishinError, ArithmeticError):
    """The product of the surface branches deviates from one."""


class BranchAmbiguity(NikishinError, ValueError):
    """A conformal map was evaluated on its cut."""
