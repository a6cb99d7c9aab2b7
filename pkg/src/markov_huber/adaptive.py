"""Data-size driven choices of the loss threshold and penalty level.

Both rules depend on the noise tail index delta only through min(delta, 1):
heavier-than-variance tails (delta < 1) slow the rate, anything with more
than two moments behaves like the two-moment case.  Dependence enters through
the chain's spectral parameter gamma as an effective sample size factor
(1 - gamma) / (1 + gamma).  Logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError


def effective_sample_factor(gamma: float) -> float:
    """(1 - gamma) / (1 + gamma); equals 1 for independent data."""
    gamma = float(gamma)
    if not (0.0 <= gamma < 1.0):
        raise InvalidInputError(f"gamma must be in [0, 1), got {gamma}")
    return (1.0 - gamma) / (1.0 + gamma)


@dataclass(frozen=True)
class AdaptiveSpec:
    """Inputs to the tuning rules.

    c_tau and c_lambda are the unspecified constants in front of the rates;
    both default to 1 and can be calibrated on pilot runs.
    """

    n: int
    d: int
    delta: float
    gamma: float
    c_tau: float = 1.0
    c_lambda: float = 1.0

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidInputError("n must be >= 1")
        object.__setattr__(self, "n", int(self.n))
        # log d must be positive for the rates to make sense
        if int(self.d) < 2:
            raise InvalidInputError("d must be >= 2")
        object.__setattr__(self, "d", int(self.d))
        if not (self.delta > 0) or math.isnan(self.delta):
            raise InvalidInputError(f"delta must be > 0, got {self.delta}")
        if not (0.0 <= self.gamma < 1.0):
            raise InvalidInputError(f"gamma must be in [0, 1), got {self.gamma}")
        if not (0 < self.c_tau < math.inf):
            raise InvalidInputError("c_tau must be finite and > 0")
        if not (0 < self.c_lambda < math.inf):
            raise InvalidInputError("c_lambda must be finite and > 0")

    @property
    def delta_eff(self) -> float:
        return min(float(self.delta), 1.0)


def select_tau(spec: AdaptiveSpec) -> float:
    """Loss threshold c_tau * (esf(gamma) * n / log d) ** (1 / (1 + min(delta, 1)))."""
    de = spec.delta_eff
    base = effective_sample_factor(spec.gamma) * spec.n / math.log(spec.d)
    return spec.c_tau * base ** (1.0 / (1.0 + de))


def select_lambda(spec: AdaptiveSpec) -> float:
    """Penalty c_lambda * (log d / (esf(gamma) * n)) ** (min(delta, 1) / (1 + min(delta, 1)))."""
    de = spec.delta_eff
    base = math.log(spec.d) / (effective_sample_factor(spec.gamma) * spec.n)
    return spec.c_lambda * base ** (de / (1.0 + de))


def consistency_precondition(spec: AdaptiveSpec, s: int) -> float:
    """s * sqrt(log d / (esf(gamma) * n)); estimation is only reliable when
    this is well below 1."""
    if int(s) < 1:
        raise InvalidInputError("s must be >= 1")
    return int(s) * math.sqrt(
        math.log(spec.d) / (effective_sample_factor(spec.gamma) * spec.n)
    )


def coefficient_error_bounds(s: int, lam: float, kappa: float) -> tuple[float, float]:
    """High-probability (l1, l2) error radii for the penalized estimator:
    (48 * s * lam / kappa, 12 * sqrt(s) * lam / kappa).

    kappa is the restricted curvature of the Huber loss near the truth.
    """
    if int(s) < 1:
        raise InvalidInputError("s must be >= 1")
    lam = float(lam)
    if not (lam >= 0) or math.isinf(lam):
        raise InvalidInputError("lam must be finite and >= 0")
    kappa = float(kappa)
    if not (kappa > 0) or math.isinf(kappa):
        raise InvalidInputError("kappa must be finite and > 0")
    s = int(s)
    return 48.0 * s * lam / kappa, 12.0 * math.sqrt(s) * lam / kappa
