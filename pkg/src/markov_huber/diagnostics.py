"""Measured counterparts of the theory's bounded quantities.

Each routine evaluates an empirical quantity on a simulated dataset (gradient
sup-norm at the truth, restricted curvature near the truth, covariance
deviation, truncated tail sums, ergodic-average tails) so experiments can
compare it against the corresponding closed-form bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .huber_core import loss_gradient
from .markov_sim import ChainSpec, CovariateMap, Dataset
from .rng import stream

# descent steps per direction when refining curvature candidates
_REFINE_STEPS = 10
# radius rungs per sampled center direction (0 is always included)
_RADII_LEVELS = 4


def grad_supnorm_at_truth(ds: Dataset, tau) -> float:
    """Sup-norm of the loss gradient at the generating coefficients."""
    if ds.truth is None:
        raise InvalidInputError("dataset carries no ground truth")
    g = loss_gradient(ds.truth.beta_star, ds.problem(), tau)
    return float(np.max(np.abs(g)))


def gradient_supnorm_bound(
    n: int,
    d: int,
    gamma: float,
    tau: float,
    delta: float,
    sigma2: float,
    v: float,
    C: float = 1.0,
) -> float:
    """Three-term high-probability bound on the gradient sup-norm at truth.

    sqrt(k * 2 * sigma2 * v * tau^(1-de) * log(d)/n) + k * 20 * tau * log(d)/n
    + C * tau^(-de), with k = (1+gamma)/(1-gamma) and de = min(delta, 1).
    C is a calibration constant (default 1); only the scaling in n and tau is
    meaningful, so rate checks are preferred over absolute comparisons.
    """
    if int(n) < 1 or int(d) < 2:
        raise InvalidInputError("need n >= 1 and d >= 2")
    if not (0.0 <= gamma < 1.0):
        raise InvalidInputError(f"gamma must be in [0, 1), got {gamma}")
    if not (tau > 0):
        raise InvalidInputError("tau must be > 0")
    if not (delta > 0):
        raise InvalidInputError("delta must be > 0")
    if sigma2 < 0 or v < 0 or C < 0:
        raise InvalidInputError("sigma2, v, C must be >= 0")
    de = min(float(delta), 1.0)
    k = (1.0 + gamma) / (1.0 - gamma)
    logd_n = math.log(d) / n
    term1 = math.sqrt(k * 2.0 * sigma2 * v * tau ** (1.0 - de) * logd_n)
    term2 = k * 20.0 * tau * logd_n
    term3 = C * tau ** (-de)
    return term1 + term2 + term3


@dataclass(frozen=True)
class LREQuery:
    """Search controls for the restricted-curvature estimate.

    r bounds the l1 distance of candidate centers from the truth;
    cone_constant is the off-support/on-support l1 mass ratio defining the
    cone of directions (any constant > 1 is admissible; 3 is customary).
    """

    r: float
    cone_constant: float = 3.0
    num_directions: int = 1000
    num_centers: int = 10

    def __post_init__(self):
        if not (self.r > 0) or math.isinf(self.r):
            raise InvalidInputError("r must be finite and > 0")
        if not (self.cone_constant >= 1.0):
            raise InvalidInputError("cone_constant must be >= 1")
        if int(self.num_directions) < 0:
            raise InvalidInputError("num_directions must be >= 0")
        if int(self.num_centers) < 1:
            raise InvalidInputError("num_centers must be >= 1")
        object.__setattr__(self, "num_directions", int(self.num_directions))
        object.__setattr__(self, "num_centers", int(self.num_centers))


def _cone_project(U: np.ndarray, support: np.ndarray, c: float) -> np.ndarray:
    """Scale off-support mass down so each column satisfies the cone bound."""
    on = np.sum(np.abs(U[support]), axis=0)
    off_mask = np.ones(U.shape[0], dtype=bool)
    off_mask[support] = False
    off = np.sum(np.abs(U[off_mask]), axis=0)
    scale = np.ones(U.shape[1])
    bad = off > c * on
    with np.errstate(invalid="ignore", divide="ignore"):
        scale[bad] = np.where(off[bad] > 0, c * on[bad] / off[bad], 0.0)
    out = U.copy()
    out[off_mask] *= scale
    return out


def _drop_and_normalize(U: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(U, axis=0)
    keep = norms > 1e-300
    return U[:, keep] / norms[keep]


def lre_estimate(ds: Dataset, tau, query: LREQuery, seed: int = 0) -> float:
    """Upper estimate of the smallest curvature of the loss over cone
    directions, minimized over centers within l1 distance query.r of truth.

    Sampled directions are cone-projected and refined by _REFINE_STEPS
    descent steps; centers sit on a radius ladder along sampled l1-unit
    offsets (radius 0, the truth itself, is always included).  The true
    infimum can only be smaller than the returned value.
    """
    if ds.truth is None or ds.truth.s == 0:
        raise InvalidInputError("dataset needs a ground truth with nonempty support")
    X, y = ds.X, ds.y
    n, d = ds.n, ds.d
    beta_star = ds.truth.beta_star
    support = ds.truth.support
    tau = float(tau)
    if not (tau > 0):
        raise InvalidInputError("tau must be > 0")

    # direction pool: support coordinates plus cone-projected gaussians
    cols = [np.eye(d)[:, support]]
    if query.num_directions > 0:
        G = stream(seed, "directions").standard_normal((d, query.num_directions))
        cols.append(G)
    U0 = np.concatenate(cols, axis=1)
    U0 = _drop_and_normalize(_cone_project(U0, support, query.cone_constant))
    if U0.shape[1] == 0:
        raise InvalidInputError("no usable directions after cone projection")

    V = stream(seed, "centers").standard_normal((d, query.num_centers))
    V /= np.sum(np.abs(V), axis=0)
    radii = np.linspace(0.0, query.r, _RADII_LEVELS)
    centers = [beta_star]
    for k in range(query.num_centers):
        for rho in radii[1:]:
            centers.append(beta_star + rho * V[:, k])

    best = math.inf
    for center in centers:
        resid = y - X @ center
        mask = np.ones(n, dtype=bool) if math.isinf(tau) else (np.abs(resid) <= tau)
        if not mask.any():
            return 0.0
        Xm = X[mask]
        A = (Xm.T @ Xm) / n

        # largest eigenvalue for the descent step size
        w = stream(seed, "directions", replicate=1).standard_normal(d)
        for _ in range(30):
            w = A @ w
            nw = np.linalg.norm(w)
            if nw == 0:
                break
            w /= nw
        lmax = float(w @ (A @ w))

        U = U0
        q = np.einsum("jk,jk->k", U, A @ U)
        best = min(best, float(q.min()))
        if lmax <= 0:
            continue
        for _ in range(_REFINE_STEPS):
            U = U - (A @ U) / lmax
            U = _drop_and_normalize(_cone_project(U, support, query.cone_constant))
            if U.shape[1] == 0:
                break
            q = np.einsum("jk,jk->k", U, A @ U)
            best = min(best, float(q.min()))
    return max(0.0, best)


def covariance_deviation(ds: Dataset, cov: CovariateMap, chain: ChainSpec) -> float:
    """Max entrywise gap between the empirical design covariance and the
    stationary one (time-invariant maps only)."""
    if cov.time_varying:
        raise InvalidInputError("time-varying covariate maps are not supported here")
    emp = (ds.X.T @ ds.X) / ds.n
    target = (cov.f * chain.pi[:, None]).T @ cov.f
    return float(np.max(np.abs(emp - target)))


def truncated_tail_sum(ds: Dataset, cov: CovariateMap, tau) -> float:
    """(1/n) sum_i envelope(Z_i)^2 * 1{|eps_i| > tau/2}."""
    if ds.eps is None:
        raise InvalidInputError("dataset carries no error vector")
    tau = float(tau)
    if not (tau > 0):
        raise InvalidInputError("tau must be > 0")
    M2 = cov.envelope[ds.Z] ** 2
    fire = np.abs(ds.eps) > tau / 2.0
    return float(np.sum(M2 * fire)) / ds.n


def truncated_tail_bound(tau: float, delta: float, sigma2: float, v_delta: float) -> float:
    """Deterministic part of the tail-sum bound: sigma2 * (2/tau)^(1+delta) * v_delta."""
    if not (tau > 0) or not (delta > 0):
        raise InvalidInputError("tau and delta must be > 0")
    return sigma2 * (2.0 / tau) ** (1.0 + delta) * v_delta


@dataclass(frozen=True)
class ConcentrationReport:
    """Empirical vs analytic tail probabilities for ergodic averages."""

    epsilon_grid: np.ndarray
    empirical_tail: np.ndarray
    bernstein_bound: np.ndarray
    replicas: int
    flagged: np.ndarray

    def __post_init__(self):
        eps = np.asarray(self.epsilon_grid, dtype=float)
        emp = np.asarray(self.empirical_tail, dtype=float)
        bnd = np.asarray(self.bernstein_bound, dtype=float)
        flg = np.asarray(self.flagged, dtype=bool)
        if not (eps.shape == emp.shape == bnd.shape == flg.shape):
            raise InvalidInputError("report grids must align")
        if np.any(emp < 0) or np.any(emp > 1):
            raise InvalidInputError("empirical tails must be probabilities")
        for arr in (eps, emp, bnd, flg):
            arr.setflags(write=False)
        object.__setattr__(self, "epsilon_grid", eps)
        object.__setattr__(self, "empirical_tail", emp)
        object.__setattr__(self, "bernstein_bound", bnd)
        object.__setattr__(self, "flagged", flg)
        object.__setattr__(self, "replicas", int(self.replicas))


def bernstein_tail_bound(n: int, gamma: float, V: float, t: float, eps: float) -> float:
    """2 * exp(-n eps^2 / ((1+gamma)/(1-gamma) * V + 10 t eps))."""
    if int(n) < 1:
        raise InvalidInputError("n must be >= 1")
    if not (0.0 <= gamma < 1.0):
        raise InvalidInputError(f"gamma must be in [0, 1), got {gamma}")
    if V < 0 or t < 0 or eps <= 0:
        raise InvalidInputError("V, t must be >= 0 and eps > 0")
    denom = (1.0 + gamma) / (1.0 - gamma) * V + 10.0 * t * eps
    if denom == 0.0:
        return 0.0
    return 2.0 * math.exp(-n * eps * eps / denom)


def _simulate_ensemble_means(
    chain: ChainSpec, f: np.ndarray, n: int, replicas: int, seed: int
) -> np.ndarray:
    """Ergodic average of f along `replicas` independent stationary paths."""
    rng = stream(seed, "bernstein")
    cum_pi = np.cumsum(chain.pi)
    cum_pi[-1] = 1.0
    cum = np.cumsum(chain.P, axis=1)
    cum[:, -1] = 1.0
    state = np.searchsorted(cum_pi, rng.random(replicas), side="right")
    total = f[state].copy()
    for _ in range(n - 1):
        u = rng.random(replicas)
        state = (u[:, None] >= cum[state]).sum(axis=1)
        total += f[state]
    return total / n


def bernstein_check(
    chain: ChainSpec,
    f_values,
    n: int,
    replicas: int,
    epsilon_grid,
    seed: int = 0,
) -> ConcentrationReport:
    """Tail probabilities of |mean f(Z_i) - pi f| against the analytic bound
    with V = Var_pi(f) and t = max |f|.

    A grid point is flagged when the empirical tail exceeds the (capped)
    bound by more than three binomial standard errors at the bound.
    """
    f = np.asarray(f_values, dtype=float)
    if f.shape != (chain.m,):
        raise InvalidInputError(f"f must have one value per state ({chain.m})")
    if not np.all(np.isfinite(f)):
        raise InvalidInputError("f must be bounded (finite)")
    n = int(n)
    replicas = int(replicas)
    if n < 1 or replicas < 1:
        raise InvalidInputError("n and replicas must be >= 1")
    eps_grid = np.asarray(epsilon_grid, dtype=float)
    if eps_grid.ndim != 1 or eps_grid.size < 1 or np.any(eps_grid <= 0):
        raise InvalidInputError("epsilon_grid must be positive")

    mean_f = float(chain.pi @ f)
    V = float(chain.pi @ (f - mean_f) ** 2)
    t = float(np.max(np.abs(f)))

    means = _simulate_ensemble_means(chain, f, n, replicas, seed)
    dev = np.abs(means - mean_f)
    empirical = np.array([(dev > e).mean() for e in eps_grid])
    bound = np.array([bernstein_tail_bound(n, chain.gamma, V, t, e) for e in eps_grid])
    capped = np.minimum(bound, 1.0)
    se = np.sqrt(capped * (1.0 - capped) / replicas)
    flagged = empirical > capped + 3.0 * se
    return ConcentrationReport(
        epsilon_grid=eps_grid,
        empirical_tail=empirical,
        bernstein_bound=bound,
        replicas=replicas,
        flagged=flagged,
    )
