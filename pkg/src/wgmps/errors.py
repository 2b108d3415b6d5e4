"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Tensor extents or operator sizes do not line up."""


class NumericError(ArithmeticError):
    """Non-finite data or a failed linear-algebra kernel."""


class ContractViolation(ValueError):
    """An input breaks a documented precondition (Hermiticity, normalization, ...)."""


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


class TruncationWarning(UserWarning):
    """Discarded weight in a single step exceeded the alarm threshold."""


class ScenarioError(RuntimeError):
    """A CLI scenario failed; the message names the scenario."""
