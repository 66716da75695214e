"""Exception hierarchy shared by all modules."""


class SpectralError(Exception):
    """Base class for library errors."""


class DimensionMismatch(SpectralError, ValueError):
    pass


class BudgetExceeded(SpectralError):
    """Raised before an enumeration or summation would exceed its element budget."""


class RegimeError(SpectralError, ValueError):
    """Parameters fall outside the regime where a closed-form rule applies."""


class NonConvergentTail(SpectralError):
    """An adaptive tail bound failed to reach the requested tolerance."""


class UnsupportedAction(SpectralError, TypeError):
    pass


class GridTooCoarse(SpectralError, ValueError):
    pass


class ConfigError(SpectralError, ValueError):
    pass
