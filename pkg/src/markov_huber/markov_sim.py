"""Reversible finite-state chains, heavy-tailed errors, dataset generation.

The stationary distribution is computed with the GTH elimination scheme,
which avoids subtractions and stays accurate for nearly-reducible chains.
The dependence level gamma is the second largest absolute eigenvalue of the
chain, computed on the pi-symmetrized transition matrix (reversible chains
only, hence real spectrum).
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, stats

from .errors import (
    InvalidChainError,
    InvalidInputError,
    InvalidModelError,
    UnsupportedChainError,
)
from .huber_core import Problem, TruthSpec, _as_float_array
from .rng import stream

_ROW_SUM_TOL = 1e-12
_STATIONARY_TOL = 1e-10
_BALANCE_TOL = 1e-10
_GAMMA_FIELD_TOL = 1e-8


def _check_transition_matrix(P) -> np.ndarray:
    P = np.ascontiguousarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise InvalidChainError(f"P must be square, got shape {P.shape}")
    if P.shape[0] < 1:
        raise InvalidChainError("P must have at least one state")
    if not np.all(np.isfinite(P)):
        raise InvalidChainError("P must be finite")
    if np.any(P < 0):
        raise InvalidChainError("P must be entrywise nonnegative")
    rowsum = P.sum(axis=1)
    if np.max(np.abs(rowsum - 1.0)) > _ROW_SUM_TOL:
        raise InvalidChainError("rows of P must sum to 1")
    return P


def _strongly_connected(adj: np.ndarray) -> bool:
    m = adj.shape[0]

    def reach(a):
        seen = np.zeros(m, dtype=bool)
        seen[0] = True
        frontier = seen.copy()
        while frontier.any():
            nxt = a[frontier].any(axis=0) & ~seen
            seen |= nxt
            frontier = nxt
        return seen

    return bool(reach(adj).all() and reach(adj.T).all())


def _period(adj: np.ndarray) -> int:
    # gcd of level[u] + 1 - level[v] over all edges, with BFS levels from 0;
    # equals the chain period when the graph is strongly connected
    m = adj.shape[0]
    level = np.full(m, -1, dtype=int)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.nonzero(adj[u])[0]:
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(int(v))
        frontier = nxt
    g = 0
    for u, v in zip(*np.nonzero(adj)):
        g = math.gcd(g, abs(int(level[u]) + 1 - int(level[v])))
    return g if g > 0 else 1


def stationary_distribution(P) -> np.ndarray:
    """Stationary law of an irreducible aperiodic chain, by GTH elimination."""
    P = _check_transition_matrix(P)
    m = P.shape[0]
    if m == 1:
        return np.array([1.0])
    adj = P > 0
    if not _strongly_connected(adj):
        raise InvalidChainError("chain is reducible")
    if _period(adj) != 1:
        raise InvalidChainError("chain is periodic")

    A = P.copy()
    for k in range(m - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0:
            raise InvalidChainError("GTH elimination failed; chain is numerically reducible")
        A[:k, :k] += np.outer(A[:k, k], A[k, :k]) / s
    x = np.zeros(m)
    x[0] = 1.0
    for k in range(1, m):
        x[k] = (x[:k] @ A[:k, k]) / A[k, :k].sum()
    pi = x / x.sum()

    resid = float(np.max(np.abs(pi @ P - pi)))
    if resid > 1e-12:
        raise InvalidChainError(f"stationary residual {resid:.3e} exceeds 1e-12")
    return pi


def _second_eigenvalue(P: np.ndarray, pi: np.ndarray) -> float:
    m = P.shape[0]
    if m == 1:
        return 0.0
    root = np.sqrt(pi)
    sym = (root[:, None] / root[None, :]) * P
    sym = 0.5 * (sym + sym.T)
    w = np.linalg.eigvalsh(sym)
    top = int(np.argmax(w))
    rest = np.abs(np.delete(w, top))
    return float(rest.max())


@dataclass(frozen=True)
class ChainSpec:
    """Validated reversible chain: transition matrix, stationary law, and its
    second largest absolute eigenvalue gamma."""

    P: np.ndarray
    pi: np.ndarray
    gamma: float

    def __post_init__(self):
        P = _check_transition_matrix(self.P)
        pi = _as_float_array(self.pi, "pi")
        if pi.ndim != 1 or pi.shape[0] != P.shape[0]:
            raise InvalidChainError("pi must be a vector matching P")
        if np.any(pi <= 0):
            raise InvalidChainError("pi must be entrywise positive")
        if abs(pi.sum() - 1.0) > _STATIONARY_TOL:
            raise InvalidChainError("pi must sum to 1")
        if float(np.max(np.abs(pi @ P - pi))) > _STATIONARY_TOL:
            raise InvalidChainError("pi is not stationary for P")
        flux = pi[:, None] * P
        if float(np.max(np.abs(flux - flux.T))) > _BALANCE_TOL:
            raise UnsupportedChainError("detailed balance fails; only reversible chains are supported")
        lam2 = _second_eigenvalue(P, pi)
        if lam2 >= 1.0 - 1e-10:
            raise InvalidChainError("chain has no spectral gap")
        if abs(float(self.gamma) - lam2) > _GAMMA_FIELD_TOL:
            raise InvalidChainError(
                f"gamma={self.gamma} does not match the spectrum ({lam2:.12g})"
            )
        P.setflags(write=False)
        pi = pi.copy()
        pi.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def m(self) -> int:
        return self.P.shape[0]

    @classmethod
    def from_transition(cls, P, pi=None) -> "ChainSpec":
        P = _check_transition_matrix(P)
        if pi is None:
            pi = stationary_distribution(P)
        else:
            pi = _as_float_array(pi, "pi")
        gamma = _second_eigenvalue(P, pi / pi.sum())
        return cls(P=P, pi=pi, gamma=gamma)


def spectral_gamma(spec: ChainSpec) -> float:
    """Second largest absolute eigenvalue, from the symmetrized matrix."""
    return _second_eigenvalue(spec.P, spec.pi)


def make_chain_with_gamma(m: int, gamma: float, pi=None) -> ChainSpec:
    """Reversible chain with the exact dependence level gamma.

    P = (1 - gamma) * (all rows pi) + gamma * I, a lazy iid-resampling chain;
    its spectrum is {1, gamma, ..., gamma} for any positive pi.
    """
    m = int(m)
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    gamma = float(gamma)
    if not (0.0 <= gamma < 1.0):
        raise InvalidInputError(f"gamma must be in [0, 1), got {gamma}")
    if pi is None:
        pi = np.full(m, 1.0 / m)
    else:
        pi = _as_float_array(pi, "pi")
        if pi.shape != (m,):
            raise InvalidInputError(f"pi must have shape ({m},)")
        if np.any(pi <= 0):
            raise InvalidInputError("pi must be entrywise positive")
        if abs(pi.sum() - 1.0) > 1e-10:
            raise InvalidInputError("pi must sum to 1")
        pi = pi / pi.sum()
    if m == 1 and gamma > 0:
        raise InvalidInputError("a single-state chain always has gamma = 0")
    P = (1.0 - gamma) * np.tile(pi, (m, 1)) + gamma * np.eye(m)
    return ChainSpec(P=P, pi=pi, gamma=gamma)


def simulate_chain(spec: ChainSpec, n: int, seed: int) -> np.ndarray:
    """Length-n path started from pi, via inverse-CDF draws on one stream."""
    n = int(n)
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    u = stream(seed, "chain").random(n)
    cum_pi = np.cumsum(spec.pi)
    cum_pi[-1] = 1.0
    cum = np.cumsum(spec.P, axis=1)
    cum[:, -1] = 1.0
    z = np.empty(n, dtype=np.int64)
    z[0] = np.searchsorted(cum_pi, u[0], side="right")
    prev = z[0]
    for i in range(1, n):
        prev = np.searchsorted(cum[prev], u[i], side="right")
        z[i] = prev
    z.setflags(write=False)
    return z


_FAMILIES = ("gaussian", "student-t", "symmetric-pareto")


@dataclass(frozen=True)
class ErrorModel:
    """Conditional error law: a base symmetric distribution scaled per state.

    delta is the assumed tail index: E|eps|^(1+delta) must be finite, which
    constrains the shape parameter (alpha > 1 + delta for the Pareto family,
    nu > 1 + delta for Student t).
    """

    family: str
    per_state_scale: np.ndarray
    delta: float
    shape: Optional[float] = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidModelError(f"family must be one of {_FAMILIES}, got {self.family!r}")
        scale = _as_float_array(self.per_state_scale, "per_state_scale")
        if scale.ndim != 1 or scale.size < 1:
            raise InvalidModelError("per_state_scale must be a nonempty vector")
        if np.any(scale < 0):
            raise InvalidModelError("per_state_scale must be nonnegative")
        delta = float(self.delta)
        if not (delta > 0) or math.isinf(delta):
            raise InvalidModelError(f"delta must be finite and > 0, got {delta}")
        if self.family == "gaussian":
            if self.shape is not None:
                raise InvalidModelError("gaussian takes no shape parameter")
        else:
            if self.shape is None:
                raise InvalidModelError(f"{self.family} requires a shape parameter")
            shape = float(self.shape)
            if not (shape > 1.0 + delta):
                raise InvalidModelError(
                    f"{self.family} needs shape > 1 + delta = {1.0 + delta}, got {shape}"
                )
            object.__setattr__(self, "shape", shape)
        scale = scale.copy()
        scale.setflags(write=False)
        object.__setattr__(self, "per_state_scale", scale)
        object.__setattr__(self, "delta", delta)

    @property
    def m(self) -> int:
        return self.per_state_scale.size

    @property
    def v_delta(self) -> float:
        return moment_vdelta(self)

    @classmethod
    def gaussian(cls, scale, delta: float) -> "ErrorModel":
        return cls("gaussian", np.asarray(scale, dtype=float), delta)

    @classmethod
    def student_t(cls, nu: float, scale, delta: float) -> "ErrorModel":
        return cls("student-t", np.asarray(scale, dtype=float), delta, shape=nu)

    @classmethod
    def symmetric_pareto(cls, alpha: float, scale, delta: float) -> "ErrorModel":
        return cls("symmetric-pareto", np.asarray(scale, dtype=float), delta, shape=alpha)


def _base_abs_moment(model: ErrorModel, q: float) -> float:
    """E |base|^q for the unit-scale member of the family."""
    if model.family == "symmetric-pareto":
        alpha = model.shape
        if q >= alpha:
            raise InvalidModelError(f"moment of order {q} diverges for alpha={alpha}")
        # |base| is Pareto(alpha) on [1, inf): E|base|^q = alpha / (alpha - q)
        return alpha / (alpha - q)
    if model.family == "student-t":
        nu = model.shape
        if q >= nu:
            raise InvalidModelError(f"moment of order {q} diverges for nu={nu}")
        pdf = stats.t(df=nu).pdf
    else:
        pdf = stats.norm.pdf
    val, _err = integrate.quad(
        lambda x: 2.0 * x**q * pdf(x), 0.0, np.inf, epsabs=0.0, epsrel=1e-8, limit=200
    )
    return float(val)


def moment_vdelta(model: ErrorModel, delta: Optional[float] = None) -> float:
    """sup over states of E |eps|^(1+delta), using the worst-case scale.

    The optional delta overrides the model's own tail index (diagnostics use
    min(delta, 1) moments).
    """
    d = model.delta if delta is None else float(delta)
    if not (d > 0):
        raise InvalidInputError("delta must be > 0")
    q = 1.0 + d
    smax = float(np.max(model.per_state_scale))
    if smax == 0.0:
        return 0.0
    return smax**q * _base_abs_moment(model, q)


def sample_errors(Z, model: ErrorModel, seed: int) -> np.ndarray:
    """Errors for a state path: per-state scale times iid base draws."""
    Z = np.asarray(Z)
    if Z.ndim != 1 or Z.size < 1:
        raise InvalidInputError("Z must be a nonempty vector of states")
    if not np.issubdtype(Z.dtype, np.integer):
        raise InvalidInputError("Z must be integer states")
    if Z.min() < 0 or Z.max() >= model.m:
        raise InvalidInputError("Z contains states outside the model range")
    rng = stream(seed, "errors")
    n = Z.size
    if model.family == "gaussian":
        base = rng.standard_normal(n)
    elif model.family == "student-t":
        base = rng.standard_t(model.shape, size=n)
    else:
        u = rng.random(n)
        mag = (1.0 - u) ** (-1.0 / model.shape)
        signs = 2.0 * rng.integers(0, 2, size=n) - 1.0
        base = signs * mag
    eps = model.per_state_scale[Z] * base
    eps.setflags(write=False)
    return eps


@dataclass(frozen=True)
class CovariateMap:
    """State-to-covariate table with an envelope used by tail bounds.

    envelope[a] must dominate max_j |f[a, j]|; sigma4 is the stationary
    fourth moment of the envelope.  tables, when given, holds one m x d map
    per time index (row i of a generated design uses tables[i]); most
    diagnostics support only the time-invariant default.
    """

    f: np.ndarray
    envelope: np.ndarray
    sigma4: float
    tables: Optional[np.ndarray] = None

    def __post_init__(self):
        f = _as_float_array(self.f, "f")
        if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
            raise InvalidInputError("f must be a nonempty m x d table")
        env = _as_float_array(self.envelope, "envelope")
        if env.shape != (f.shape[0],):
            raise InvalidInputError("envelope must have one entry per state")
        if np.any(np.abs(f) > env[:, None] + 1e-12):
            raise InvalidInputError("envelope must dominate |f| rowwise")
        sigma4 = float(self.sigma4)
        if not (sigma4 >= 0) or math.isinf(sigma4):
            raise InvalidInputError("sigma4 must be finite and >= 0")
        f = f.copy()
        f.setflags(write=False)
        env = env.copy()
        env.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "envelope", env)
        object.__setattr__(self, "sigma4", sigma4)
        if self.tables is not None:
            tables = _as_float_array(self.tables, "tables")
            if tables.ndim != 3 or tables.shape[1:] != f.shape:
                raise InvalidInputError("tables must have shape (T, m, d)")
            if np.any(np.abs(tables) > env[None, :, None] + 1e-12):
                raise InvalidInputError("envelope must dominate |tables| statewise")
            tables = tables.copy()
            tables.setflags(write=False)
            object.__setattr__(self, "tables", tables)

    @property
    def m(self) -> int:
        return self.f.shape[0]

    @property
    def d(self) -> int:
        return self.f.shape[1]

    @property
    def time_varying(self) -> bool:
        return self.tables is not None

    @classmethod
    def from_table(cls, f, pi, tables=None) -> "CovariateMap":
        f = _as_float_array(f, "f")
        if f.ndim != 2:
            raise InvalidInputError("f must be 2-d")
        pi = _as_float_array(pi, "pi")
        if pi.shape != (f.shape[0],):
            raise InvalidInputError("pi must have one entry per state")
        env = np.max(np.abs(f), axis=1)
        if tables is not None:
            tab = _as_float_array(tables, "tables")
            if tab.ndim != 3 or tab.shape[1:] != f.shape:
                raise InvalidInputError("tables must have shape (T, m, d)")
            env = np.maximum(env, np.max(np.abs(tab), axis=(0, 2)))
        sigma4 = float(pi @ env**4)
        return cls(f=f, envelope=env, sigma4=sigma4, tables=tables)


@dataclass(frozen=True)
class Dataset:
    """One simulated regression sample plus its provenance.

    Loaded datasets keep only what the files carry: Z, X, y, and (from the
    sidecar) the truth and seed; chain, cov, err, eps stay None.
    """

    Z: np.ndarray
    X: np.ndarray
    y: np.ndarray
    eps: Optional[np.ndarray] = None
    truth: Optional[TruthSpec] = None
    chain: Optional[ChainSpec] = None
    cov: Optional[CovariateMap] = None
    err: Optional[ErrorModel] = None
    seed: Optional[int] = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def problem(self) -> Problem:
        return Problem(X=self.X, y=self.y)


def generate_dataset(
    chain: ChainSpec,
    cov: CovariateMap,
    err: ErrorModel,
    truth: TruthSpec,
    n: int,
    seed: int,
) -> Dataset:
    """Simulate the chain, map states to covariates, add scaled errors."""
    if cov.m != chain.m or err.m != chain.m:
        raise InvalidInputError(
            f"state counts disagree: chain {chain.m}, cov {cov.m}, err {err.m}"
        )
    if truth.d != cov.d:
        raise InvalidInputError(f"beta_star has {truth.d} entries but cov maps to {cov.d}")
    Z = simulate_chain(chain, n, seed)
    if cov.tables is not None:
        if cov.tables.shape[0] < n:
            raise InvalidInputError(
                f"time-varying map covers {cov.tables.shape[0]} indices, need {n}"
            )
        X = cov.tables[np.arange(n), Z]
    else:
        X = cov.f[Z]
    eps = sample_errors(Z, err, seed)
    y = X @ truth.beta_star + eps
    for arr in (X, y):
        arr.setflags(write=False)
    return Dataset(Z=Z, X=X, y=y, eps=eps, truth=truth, chain=chain, cov=cov, err=err, seed=int(seed))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_dataset(ds: Dataset, path: str) -> None:
    """Write the sample as CSV plus a `path`.meta sidecar with provenance."""
    d = ds.d
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "z", "y"] + [f"x_{j}" for j in range(1, d + 1)])
        for i in range(ds.n):
            w.writerow(
                [i + 1, int(ds.Z[i]), _fmt(ds.y[i])] + [_fmt(v) for v in ds.X[i]]
            )
    lines = []
    if ds.err is not None:
        lines.append(f"family = {ds.err.family}")
        if ds.err.family == "student-t":
            lines.append(f"nu = {_fmt(ds.err.shape)}")
        elif ds.err.family == "symmetric-pareto":
            lines.append(f"alpha = {_fmt(ds.err.shape)}")
        lines.append(f"delta = {_fmt(ds.err.delta)}")
    if ds.chain is not None:
        lines.append(f"gamma = {_fmt(ds.chain.gamma)}")
        lines.append(f"m = {ds.chain.m}")
    if ds.seed is not None:
        lines.append(f"seed = {ds.seed}")
    if ds.truth is not None:
        lines.append("beta_star = " + ",".join(_fmt(v) for v in ds.truth.beta_star))
    with open(path + ".meta", "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_meta(path: str) -> dict:
    """Parse the sidecar written by save_dataset into typed values."""
    meta: dict = {}
    try:
        with open(path + ".meta") as fh:
            text = fh.read()
    except FileNotFoundError:
        return meta
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key == "family":
            meta[key] = val
        elif key == "beta_star":
            meta[key] = np.array([float(v) for v in val.split(",")])
        elif key in ("m", "seed"):
            meta[key] = int(val)
        elif key:
            meta[key] = float(val)
    return meta


def load_dataset(path: str) -> Dataset:
    """Read a CSV written by save_dataset; provenance comes from the sidecar."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header[:3] != ["i", "z", "y"] or not all(
            re.fullmatch(r"x_\d+", h) for h in header[3:]
        ):
            raise InvalidInputError(f"unrecognized dataset header: {header!r}")
        d = len(header) - 3
        if d < 1:
            raise InvalidInputError("dataset has no covariate columns")
        Z, y, X = [], [], []
        for row in rd:
            if not row:
                continue
            if len(row) != d + 3:
                raise InvalidInputError(f"row {row[0]!r} has {len(row)} fields, expected {d + 3}")
            Z.append(int(row[1]))
            y.append(float(row[2]))
            X.append([float(v) for v in row[3:]])
    if not y:
        raise InvalidInputError("dataset is empty")
    meta = load_meta(path)
    truth = None
    if "beta_star" in meta:
        if meta["beta_star"].size != d:
            raise InvalidInputError("beta_star in sidecar does not match the column count")
        truth = TruthSpec(beta_star=meta["beta_star"])
    Za = np.asarray(Z, dtype=np.int64)
    Xa = np.asarray(X, dtype=float)
    ya = np.asarray(y, dtype=float)
    for arr in (Za, Xa, ya):
        arr.setflags(write=False)
    return Dataset(Z=Za, X=Xa, y=ya, truth=truth, seed=meta.get("seed"))
