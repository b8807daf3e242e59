"""Exception and warning types raised across the package."""


class CprojError(Exception):
    """Base class for every error raised by cproj_lab."""


class JetOrderError(CprojError):
    """A jet of order above three was requested or an order was overdrawn."""


class DegenerateMetric(CprojError):
    """|det g| fell below the degeneracy threshold."""


class UnsupportedRank(CprojError):
    """Covariant derivative requested for an unsupported tensor rank."""


class PathLeavesDomain(CprojError):
    """A path or integrated curve left the chart's domain box."""


class NotHermitian(CprojError):
    """A tensor failed the J-invariance test."""


class DegenerateSolution(CprojError):
    """A solution tensor is singular where it must be invertible."""


class NotEinstein(CprojError):
    """The metric is not Einstein to tolerance."""


class LambdaVanishes(CprojError):
    """The gradient covector of a solution vanishes identically."""


class NotBZero(CprojError):
    """Normalization via the one-parameter family needs B = 0."""


class BZero(CprojError):
    """The operation needs B different from zero."""


class WrongB(CprojError):
    """The operation needs B = -1."""


class DimensionTooSmall(CprojError):
    """Real dimension too small for the requested conversion."""


class QuadratureFailure(CprojError):
    """Primitive quadrature did not converge."""


class NonStabilized(CprojError):
    """Holonomy dimension kept changing as loops were doubled."""


class BadDimension(CprojError):
    """Complex dimension outside the supported range."""


class Infeasible(CprojError):
    """No realization exists for the requested (n, k, l)."""


class UnknownKey(CprojError):
    """Catalog key not recognised."""


class BadParams(CprojError):
    """Catalog parameters invalid for the requested entry."""


class SchemaError(CprojError):
    """Input JSON did not match the expected shape."""


class ZeroVelocity(CprojError):
    """Curve velocity vanished where a direction was required."""


class IndefiniteMetricWarning(UserWarning):
    """A constructed metric is not positive definite."""
