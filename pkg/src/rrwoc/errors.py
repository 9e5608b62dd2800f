"""Exception types raised across the package.

Every error derives from RrwocError; the ones that are really argument
problems also derive from ValueError so generic callers can catch them
the usual way.
"""


class RrwocError(Exception):
    """Base class for all rrwoc errors."""


class DimensionMismatch(RrwocError, ValueError):
    """Point sets / coefficients with incompatible dimensions."""


class InvalidParams(RrwocError, ValueError):
    """Configuration or argument outside its documented domain."""


class RankDeficient(RrwocError):
    """Covariate block is numerically rank deficient; the hypothesis draw is unusable."""


class DegenerateCovariates(RrwocError):
    """All matched covariates are zero; the 1D normal equation is undefined."""


class ZeroMomentSum(RrwocError):
    """Covariate first moment sums to zero; the moment-ratio estimator is undefined."""


class NoValidHypothesis(RrwocError):
    """Every candidate hypothesis was degenerate; no estimate can be produced."""


class InstanceTooLarge(RrwocError, ValueError):
    """Exhaustive enumeration would exceed the configured hypothesis cap."""


class DegenerateHull(RrwocError, ValueError):
    """Input points are affinely degenerate; their convex hull has no volume."""


class CloudFileError(RrwocError, ValueError):
    """A point-cloud file failed to parse or validate."""
