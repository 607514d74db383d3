"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain where a function is defined."""


class SingularPointError(DomainError):
    """Evaluation requested exactly at a non-integrable singular point."""


class ConfigError(ValueError):
    """Invalid experiment or CLI configuration."""


class ResourceLimitError(RuntimeError):
    """Requested problem size exceeds the configured limits."""


class ConvergenceError(RuntimeError):
    """An iterative method stopped before reaching its tolerance.

    ``partial`` carries the best available result and ``residual`` the
    last error estimate, so callers can decide whether to accept it.
    """

    def __init__(self, message, partial=None, residual=None):
        super().__init__(message)
        self.partial = partial
        self.residual = residual


class RealizationError(RuntimeError):
    """A single disorder realization failed; records how to reproduce it."""

    def __init__(self, message, index, seed):
        super().__init__(f"{message} (realization {index}, seed {seed})")
        self.index = index
        self.seed = seed
