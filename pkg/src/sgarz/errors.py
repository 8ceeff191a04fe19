"""Exception hierarchy shared by all sgarz modules."""


class SGARZError(Exception):
    """Base class for every error raised by the package."""


class SizeLimitError(SGARZError, ValueError):
    """Requested basis level exceeds the configured maximum."""


class AssumptionViolation(SGARZError):
    """The triple-product matrices are not simultaneously diagonalizable."""

    def __init__(self, message, pair=None, residual=None):
        super().__init__(message)
        self.pair = pair
        self.residual = residual


class PositivityError(SGARZError, ArithmeticError):
    """P(rho) lost strict positive definiteness (vacuum-adjacent state)."""

    def __init__(self, min_eigenvalue, cell=None, time=None):
        self.min_eigenvalue = float(min_eigenvalue)
        self.cell = cell
        self.time = time
        msg = f"P(rho) not positive definite: min eigenvalue {self.min_eigenvalue:.3e}"
        if cell is not None:
            msg += f" in cell {cell}"
        if time is not None:
            msg += f" at t={time:.6g}"
        super().__init__(msg)


class DomainError(SGARZError, ValueError):
    """Argument outside the domain of the operation."""


class UnsupportedConfiguration(SGARZError, ValueError):
    """Configuration outside what an exact solver can handle (e.g. vacuum)."""


class ConfigError(SGARZError, ValueError):
    """Invalid or incomplete configuration file."""


class CacheError(SGARZError, OSError):
    """Basis cache file is missing, truncated or corrupted."""


class GridMismatchError(SGARZError, ValueError):
    """Two summaries were computed on different grids."""
