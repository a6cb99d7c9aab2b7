"""Exception types raised by this package.

Everything user-facing derives from ValueError so callers can catch broadly,
except NumericalError which signals a solver breakdown rather than bad input.
"""


class InvalidInputError(ValueError):
    """Malformed numeric input: wrong shape, non-finite entries, bad range."""


class InvalidChainError(ValueError):
    """Transition matrix is not a usable chain (not stochastic, reducible, periodic)."""


class UnsupportedChainError(ValueError):
    """Chain is valid but outside the supported class (detailed balance fails)."""


class InvalidModelError(ValueError):
    """Error-distribution parameters violate the required moment conditions."""


class NumericalError(RuntimeError):
    """Non-finite values or a collapsed step size during iterative fitting."""
