"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class SingularityError(ArithmeticError):
    """A density or divisor vanished where a finite value was required."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to bracket or converge."""


class DivergenceError(ArithmeticError):
    """An integral required to be finite diverges."""


class BlowUpError(RuntimeError):
    """A simulated path exceeded the configured magnitude guard."""


class ConfigError(ValueError):
    """An experiment configuration is missing or inconsistent."""
