"""Exception types shared across the package."""


class HeatBayesError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HeatBayesError):
    """Invalid configuration value, file, or argument combination."""


class NonPositiveConductivityError(HeatBayesError):
    """The solver needed kappa(theta) at a point where the model is <= 0."""

    def __init__(self, message, step=None, value=None):
        super().__init__(message)
        self.step = step
        self.value = value


class SingularSystemError(HeatBayesError):
    """A linear system that should be solvable was numerically singular."""


class GewekeUndefinedError(HeatBayesError):
    """A Geweke segment mean is zero, so the relative drift is undefined."""
