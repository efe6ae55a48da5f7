"""Exception types shared across the package."""


class WfdensityError(Exception):
    """Base class for all package-specific failures."""


class DomainError(WfdensityError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ParameterError(WfdensityError, ValueError):
    """Parameters are structurally invalid or describe an unsupported regime."""


class QuadratureError(WfdensityError, ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance."""


class SingularityError(WfdensityError, ArithmeticError):
    """A scalar evaluation exceeded the configured overflow cap near a boundary."""


class MonteCarloError(WfdensityError, ArithmeticError):
    """A Monte Carlo estimate degenerated (e.g. every path evaluation clamped)."""


class EmptySampleError(WfdensityError, ValueError):
    """An estimator was given an empty sample."""


class GridError(WfdensityError, ValueError):
    """Two grid densities cannot be brought onto a common grid."""


class ConfigError(WfdensityError, ValueError):
    """Experiment configuration failed validation."""
