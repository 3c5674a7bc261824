"""Error types shared across the package."""


class InvalidInput(ValueError):
    """Input violates an operation's preconditions (shape, range, finiteness)."""


class ConfigError(Exception):
    """Scenario configuration is missing, malformed, or inconsistent."""


class NumericalFailure(ArithmeticError):
    """A numerical routine failed to produce a usable result."""


class NotPSD(NumericalFailure):
    """Matrix expected to be positive semidefinite has a significantly negative eigenvalue."""


class SingularMatrix(NumericalFailure):
    """Matrix is singular or too ill-conditioned for the requested operation."""
