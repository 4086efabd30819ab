"""Exception hierarchy shared across the toolkit."""


class SigmaODError(Exception):
    """Base class for every error raised by this package."""


class IndefiniteDowndateError(SigmaODError, ArithmeticError):
    """A rank-one downdate would destroy positive definiteness.

    Attributes
    ----------
    column : int or None
        Offending column of a multi-column downdate, if applicable.
    """

    def __init__(self, msg, column=None):
        super().__init__(msg)
        self.column = column


class DegenerateDeviationError(SigmaODError, ArithmeticError):
    """Deviation matrix has numerical rank below its row count."""


class MomentFeasibilityError(SigmaODError, ValueError):
    """Skewness/kurtosis pair outside the feasible region."""


class ParameterError(SigmaODError, ValueError):
    """Invalid generator or filter parameter."""


class MeasurementCovarianceSingular(SigmaODError, ArithmeticError):
    """Innovation covariance is not positive definite."""


class FilterError(SigmaODError):
    """Failure inside a filter run, annotated with the epoch where it happened."""

    def __init__(self, msg, epoch=None):
        super().__init__(msg)
        self.epoch = epoch


class IntegrationError(SigmaODError, ArithmeticError):
    """Non-finite state rates met during integration."""

    def __init__(self, msg, time=None):
        super().__init__(msg)
        self.time = time


class GeometryError(SigmaODError, ValueError):
    """Degenerate geometry (zero range, rectilinear orbit, singular elements)."""


class HarmonicsParseError(SigmaODError, ValueError):
    """Malformed or incomplete gravity coefficient file."""


class EmptyScenarioError(SigmaODError):
    """Scenario produced no visible measurement epochs."""


class ConfigError(SigmaODError, ValueError):
    """Invalid scenario configuration."""
