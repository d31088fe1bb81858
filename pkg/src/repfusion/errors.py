"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``ConfigError`` -> 2, ``DomainError``
(and subclasses) -> 3.
"""


class RepfusionError(Exception):
    """Base class for all library errors."""


class ConfigError(RepfusionError, ValueError):
    """Malformed or invalid specification (bad JSON, unknown field, bad parameter)."""


class DomainError(RepfusionError, ValueError):
    """An argument lies outside the domain of the operation."""


class ExtrapolationError(DomainError):
    """Tabulated curve evaluated past its last knot."""


class UnsupportedRegimeError(DomainError):
    """Operation requested on a cost class it does not apply to."""


class DivergenceError(RepfusionError, ArithmeticError):
    """A bracketing search failed to terminate."""
