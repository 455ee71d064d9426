"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit 2,
data problems exit 3, numerical failures exit 4.
"""

from __future__ import annotations


class ShaftPowerError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(ShaftPowerError):
    """Invalid configuration, shapes, modes, or argument combinations."""


class DataError(ShaftPowerError):
    """Missing, malformed, or degenerate input data."""


class NumericalError(ShaftPowerError):
    """Non-finite values or numerically undefined results."""


class OutOfDomainError(DataError):
    """A query point falls outside a grid's bounding box on one axis."""

    def __init__(self, axis: str, value: float, lo: float, hi: float):
        self.axis = axis
        self.value = value
        self.lo = lo
        self.hi = hi
        super().__init__(
            f"query {value!r} outside {axis} axis range [{lo!r}, {hi!r}]"
        )


class UndefinedCorrelationError(DataError):
    """Pearson correlation is undefined because one input has zero variance."""
