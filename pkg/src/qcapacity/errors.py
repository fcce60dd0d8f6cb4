"""Exception types shared across the package."""


class QCapacityError(ValueError):
    """Base class for contract violations raised by this package."""


class DimensionError(QCapacityError):
    """Shapes or dimensions do not fit together."""


class ValidationError(QCapacityError):
    """An input violates a mathematical invariant (positivity, trace, isometry, ...)."""
