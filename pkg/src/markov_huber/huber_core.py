"""Huber loss kernel and problem containers.

The pointwise loss is quadratic on [-tau, tau] and grows linearly outside.
tau = +inf is a supported limit and recovers the squared loss exactly, which
is what the lasso baseline uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    return arr


def _check_tau(tau) -> float:
    tau = float(tau)
    # +inf is allowed (squared-loss limit); nan and tau <= 0 are not
    if math.isnan(tau) or tau <= 0:
        raise InvalidInputError(f"tau must be positive or +inf, got {tau}")
    return tau


@dataclass(frozen=True)
class HuberConfig:
    """Loss threshold and l1 penalty level for one fit."""

    tau: float
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "tau", _check_tau(self.tau))
        lam = float(self.lam)
        if math.isnan(lam) or math.isinf(lam) or lam < 0:
            raise InvalidInputError(f"lam must be finite and >= 0, got {lam}")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class Problem:
    """Design matrix and response, coerced to read-only float64."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float)
        if X.ndim != 2:
            raise InvalidInputError(f"X must be 2-d, got shape {X.shape}")
        if y.ndim != 1:
            raise InvalidInputError(f"y must be 1-d, got shape {y.shape}")
        if X.shape[0] != y.shape[0]:
            raise InvalidInputError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInputError("need at least one row and one column")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("X must be finite")
        if not np.all(np.isfinite(y)):
            raise InvalidInputError("y must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class TruthSpec:
    """Ground-truth coefficients for simulated data; support is derived."""

    beta_star: np.ndarray
    support: np.ndarray = field(init=False)

    def __post_init__(self):
        beta = _as_float_array(self.beta_star, "beta_star")
        if beta.ndim != 1:
            raise InvalidInputError("beta_star must be 1-d")
        beta = beta.copy()
        beta.setflags(write=False)
        supp = np.flatnonzero(beta)
        supp.setflags(write=False)
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "support", supp)

    @property
    def s(self) -> int:
        return int(self.support.size)

    @property
    def d(self) -> int:
        return int(self.beta_star.size)


def huber_value(w, tau):
    """Pointwise loss: w^2/2 when |w| <= tau, else tau*|w| - tau^2/2."""
    tau = _check_tau(tau)
    arr = _as_float_array(w, "w")
    if math.isinf(tau):
        out = 0.5 * arr * arr
    else:
        a = np.abs(arr)
        out = np.where(a <= tau, 0.5 * arr * arr, tau * a - 0.5 * tau * tau)
    return float(out) if out.ndim == 0 else out


def truncate(w, t):
    """Clamp w into [-t, t].  t = +inf leaves w unchanged."""
    t = _check_tau(t)
    arr = _as_float_array(w, "w")
    if math.isinf(t):
        out = arr + 0.0
    else:
        out = np.clip(arr, -t, t)
    return float(out) if out.ndim == 0 else out


def huber_deriv(w, tau):
    """Derivative of huber_value in w.  Identical to truncate(w, tau)."""
    return truncate(w, tau)


def _residuals(beta, problem: Problem) -> np.ndarray:
    beta = _as_float_array(beta, "beta")
    if beta.ndim != 1 or beta.shape[0] != problem.d:
        raise InvalidInputError(
            f"beta must have shape ({problem.d},), got {np.shape(beta)}"
        )
    return problem.y - problem.X @ beta


def _loss_from_residuals(r: np.ndarray, tau: float, n: int) -> float:
    # unvalidated fast path shared with the solver
    if math.isinf(tau):
        return float(r @ r) / (2.0 * n)
    a = np.abs(r)
    inside = a <= tau
    quad = np.where(inside, 0.5 * r * r, tau * a - 0.5 * tau * tau)
    return float(np.sum(quad)) / n


def _grad_from_residuals(X: np.ndarray, r: np.ndarray, tau: float, n: int) -> np.ndarray:
    if math.isinf(tau):
        tr = r
    else:
        tr = np.clip(r, -tau, tau)
    return -(X.T @ tr) / n


def loss_value(beta, problem: Problem, tau) -> float:
    """Empirical Huber loss (1/n) sum_i h_tau(y_i - x_i' beta)."""
    tau = _check_tau(tau)
    r = _residuals(beta, problem)
    if not np.all(np.isfinite(r)):
        raise InvalidInputError("residuals overflowed; beta is out of range")
    return _loss_from_residuals(r, tau, problem.n)


def loss_gradient(beta, problem: Problem, tau) -> np.ndarray:
    """Gradient of loss_value: -(1/n) X' truncate(y - X beta, tau)."""
    tau = _check_tau(tau)
    r = _residuals(beta, problem)
    if not np.all(np.isfinite(r)):
        raise InvalidInputError("residuals overflowed; beta is out of range")
    return _grad_from_residuals(problem.X, r, tau, problem.n)


def hessian_quadratic_form(beta, problem: Problem, tau, u) -> float:
    """u' H(beta) u where H = (1/n) X' diag(1{|r| <= tau}) X.

    The indicator uses the residuals at beta; tau = +inf keeps every row.
    """
    tau = _check_tau(tau)
    r = _residuals(beta, problem)
    u = _as_float_array(u, "u")
    if u.ndim != 1 or u.shape[0] != problem.d:
        raise InvalidInputError(f"u must have shape ({problem.d},), got {np.shape(u)}")
    Xu = problem.X @ u
    if math.isinf(tau):
        val = Xu @ Xu
    else:
        val = np.sum(Xu * Xu * (np.abs(r) <= tau))
    return float(val) / problem.n
