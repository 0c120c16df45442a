"""Exception hierarchy shared across the package.

Two families matter to callers (and to the CLI exit codes): ``ConfigError``
covers bad inputs and violated preconditions, ``NumericalError`` covers
failures of the numerics themselves.
"""


class BergmanLabError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(BergmanLabError):
    """Invalid input: bad config values, violated preconditions, bad domains."""


class NumericalError(BergmanLabError):
    """A numerical procedure failed to produce a certified result."""


# -- geometry ----------------------------------------------------------------

class NonPositiveCurvature(ConfigError):
    """The Laplacian density f dropped to <= 0 inside the stated domain."""

    def __init__(self, x):
        self.x = float(x)
        super().__init__(f"f(x) <= 0 at x = {self.x:.6g}; the form is not Kahler there")


class DomainExceeded(ConfigError):
    """An evaluation point lies outside the potential's domain of validity."""


# -- logquad -----------------------------------------------------------------

class NoDecayCertificate(ConfigError):
    """Infinite integration endpoint requested without a concavity certificate."""


class ToleranceNotMet(NumericalError):
    """Adaptive refinement stalled before reaching the requested tolerance."""


class NonNegativeSlope(ConfigError):
    """The concave tail bound needs a strictly negative slope at the cut."""


class BadParams(ConfigError):
    """Tail-oracle parameters outside their legal range."""


# -- model1d -----------------------------------------------------------------

class NoConvergence(NumericalError):
    """Peak search failed; usually signals a potential violating concavity."""

    def __init__(self, iterations, message=None):
        self.iterations = int(iterations)
        super().__init__(message or f"no convergence after {self.iterations} iterations")


class RegimeTooSmall(ConfigError):
    """Laplace's method requested below the a >= sqrt(k) regime."""


class BadThresholds(ConfigError):
    """Regime thresholds must satisfy 0 < R1 < R < 1, C >= 0, C1 > 0."""


# -- density -----------------------------------------------------------------

class TruncationNotConverged(NumericalError):
    """The adaptive degree cap failed to stabilize a density sum."""


class NoCrossing(NumericalError):
    """The density ratio never crosses 1/2 along the scanned ray."""


class RatioUnderflow(NumericalError):
    """log(ratio) fell below -700 at the largest ladder k.

    Carries the fit computed on the usable prefix in ``fit`` when one exists.
    """

    def __init__(self, message, fit=None):
        self.fit = fit
        super().__init__(message)


# -- gram --------------------------------------------------------------------

class NotPositiveDefinite(NumericalError):
    """Gram factorization broke down (quadrature too coarse or cap too high)."""

    def __init__(self, index):
        self.index = int(index)
        super().__init__(f"Gram matrix is not positive definite at basis index {self.index}")


class EmptySubspace(ConfigError):
    """The requested degree split leaves the high subspace empty."""
