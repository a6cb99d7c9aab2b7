"""Experiment harness: simulated sweeps over (n, d, s, delta, gamma).

One generation scheme is used everywhere: a lazy chain on m states with
uniform stationary law and exact dependence level gamma, one gaussian
state-to-covariate table drawn per cell (shared across n and replicates so
rate curves vary only through the sample path), unit error scale, and
alternating +-1 coefficients on the first s coordinates.

Every row's seed is derived by hashing the cell coordinates, so replicates
are independent, reruns are byte-identical, and both estimators of a row see
the same data.
"""

from __future__ import annotations

import csv
import math
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .adaptive import (
    AdaptiveSpec,
    consistency_precondition,
    effective_sample_factor,
    select_lambda,
    select_tau,
)
from .errors import InvalidInputError, NumericalError
from .huber_core import HuberConfig, Problem, TruthSpec
from .markov_sim import (
    ChainSpec,
    CovariateMap,
    Dataset,
    ErrorModel,
    generate_dataset,
    make_chain_with_gamma,
)
from .rng import derive_seed, stream
from .solver import SolverConfig, fit

RESULTS_HEADER = (
    "rep,n,d,s,delta,gamma,estimator,tau,lambda,l1_error,l2_error,"
    "support_precision,support_recall,kkt_residual,converged,seed,wall_time_ms"
)
SUPPORT_THRESHOLD = 1e-8
ESTIMATORS = ("ahr", "lasso")


def parse_family(text: str) -> tuple[str, Optional[float]]:
    """Parse 'gaussian', 'student-t(NU)', or 'symmetric-pareto(ALPHA)'."""
    s = text.strip().lower()
    if s == "gaussian":
        return "gaussian", None
    m = re.fullmatch(r"(student-t|symmetric-pareto)\(([^)]+)\)", s)
    if not m:
        raise InvalidInputError(
            f"unrecognized family {text!r}; expected gaussian, "
            "student-t(nu) or symmetric-pareto(alpha)"
        )
    return m.group(1), float(m.group(2))


def family_label(family: str, shape: Optional[float]) -> str:
    return family if shape is None else f"{family}({shape!r})"


@dataclass(frozen=True)
class SweepConfig:
    n_grid: tuple
    d: int
    s: int
    delta_list: tuple
    gamma_list: tuple
    replicates: int
    family: str = "gaussian"
    c_tau: float = 1.0
    c_lambda: float = 1.0
    base_seed: int = 0
    estimators: tuple = ("ahr",)
    m: int = 50

    def __post_init__(self):
        ng = tuple(int(v) for v in self.n_grid)
        if not ng or any(v < 1 for v in ng):
            raise InvalidInputError("n_grid must be nonempty positive integers")
        object.__setattr__(self, "n_grid", ng)
        if int(self.d) < 2:
            raise InvalidInputError("d must be >= 2")
        object.__setattr__(self, "d", int(self.d))
        if not (1 <= int(self.s) <= int(self.d)):
            raise InvalidInputError("s must be in [1, d]")
        object.__setattr__(self, "s", int(self.s))
        dl = tuple(float(v) for v in self.delta_list)
        if not dl or any(not (v > 0) for v in dl):
            raise InvalidInputError("delta_list must be nonempty and positive")
        object.__setattr__(self, "delta_list", dl)
        gl = tuple(float(v) for v in self.gamma_list)
        if not gl or any(not (0.0 <= v < 1.0) for v in gl):
            raise InvalidInputError("gamma_list entries must be in [0, 1)")
        object.__setattr__(self, "gamma_list", gl)
        if int(self.replicates) < 1:
            raise InvalidInputError("replicates must be >= 1")
        object.__setattr__(self, "replicates", int(self.replicates))
        parse_family(self.family)
        if not (self.c_tau > 0) or not (self.c_lambda > 0):
            raise InvalidInputError("c_tau and c_lambda must be > 0")
        est = tuple(self.estimators)
        if not est or any(e not in ESTIMATORS for e in est):
            raise InvalidInputError(f"estimators must be a nonempty subset of {ESTIMATORS}")
        object.__setattr__(self, "estimators", est)
        if int(self.m) < 1:
            raise InvalidInputError("m must be >= 1")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "base_seed", int(self.base_seed))


@dataclass(frozen=True)
class ResultRow:
    rep: int
    n: int
    d: int
    s: int
    delta: float
    gamma: float
    estimator: str
    tau: float
    lam: float
    l1_error: float
    l2_error: float
    support_precision: float
    support_recall: float
    kkt_residual: float
    converged: bool
    seed: int
    wall_time_ms: float


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def row_to_csv(row: ResultRow) -> list[str]:
    return [
        str(row.rep),
        str(row.n),
        str(row.d),
        str(row.s),
        _fmt(row.delta),
        _fmt(row.gamma),
        row.estimator,
        _fmt(row.tau),
        _fmt(row.lam),
        _fmt(row.l1_error),
        _fmt(row.l2_error),
        _fmt(row.support_precision),
        _fmt(row.support_recall),
        _fmt(row.kkt_residual),
        "true" if row.converged else "false",
        str(row.seed),
        _fmt(row.wall_time_ms),
    ]


def write_results_csv(rows, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER.split(","))
        for row in rows:
            w.writerow(row_to_csv(row))


def read_results_csv(path: str) -> list[dict]:
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        need = set(RESULTS_HEADER.split(","))
        have = set(rd.fieldnames or ())
        if not need <= have:
            raise InvalidInputError(f"results CSV missing columns: {sorted(need - have)}")
        for rec in rd:
            out.append(
                {
                    "rep": int(rec["rep"]),
                    "n": int(rec["n"]),
                    "d": int(rec["d"]),
                    "s": int(rec["s"]),
                    "delta": float(rec["delta"]),
                    "gamma": float(rec["gamma"]),
                    "estimator": rec["estimator"],
                    "tau": float(rec["tau"]),
                    "lambda": float(rec["lambda"]),
                    "l1_error": float(rec["l1_error"]),
                    "l2_error": float(rec["l2_error"]),
                    "support_precision": float(rec["support_precision"]),
                    "support_recall": float(rec["support_recall"]),
                    "kkt_residual": float(rec["kkt_residual"]),
                    "converged": rec["converged"] == "true",
                    "seed": int(rec["seed"]),
                    "wall_time_ms": float(rec["wall_time_ms"]),
                }
            )
    return out


def make_beta_star(d: int, s: int) -> TruthSpec:
    beta = np.zeros(d)
    beta[:s] = [1.0 if j % 2 == 0 else -1.0 for j in range(s)]
    return TruthSpec(beta_star=beta)


def make_error_model(family: str, delta: float, m: int) -> ErrorModel:
    fam, shape = parse_family(family)
    scale = np.ones(m)
    if fam == "gaussian":
        return ErrorModel.gaussian(scale, delta)
    if fam == "student-t":
        return ErrorModel.student_t(shape, scale, delta)
    return ErrorModel.symmetric_pareto(shape, scale, delta)


def make_cell_components(
    cfg: SweepConfig, delta: float, gamma: float
) -> tuple[ChainSpec, CovariateMap, ErrorModel, TruthSpec]:
    """Chain, design table, error model, truth for one (delta, gamma) cell.

    The design seed excludes n and rep on purpose: one table per cell keeps
    the design fixed along a rate curve.
    """
    fam, shape = parse_family(cfg.family)
    label = family_label(fam, shape)
    chain = make_chain_with_gamma(cfg.m, gamma)
    design_seed = derive_seed(
        cfg.base_seed, "design", cfg.m, cfg.d, cfg.s, float(delta), float(gamma), label
    )
    f = stream(design_seed, "design").standard_normal((cfg.m, cfg.d))
    cov = CovariateMap.from_table(f, chain.pi)
    err = make_error_model(cfg.family, delta, cfg.m)
    truth = make_beta_star(cfg.d, cfg.s)
    return chain, cov, err, truth


def cell_seed(cfg: SweepConfig, delta: float, gamma: float, n: int, rep: int) -> int:
    fam, shape = parse_family(cfg.family)
    label = family_label(fam, shape)
    return derive_seed(
        cfg.base_seed, "cell", cfg.m, cfg.d, cfg.s, float(delta), float(gamma), label, int(n), int(rep)
    )


def generate_cell_dataset(
    cfg: SweepConfig, delta: float, gamma: float, n: int, rep: int
) -> Dataset:
    chain, cov, err, truth = make_cell_components(cfg, delta, gamma)
    return generate_dataset(chain, cov, err, truth, n, cell_seed(cfg, delta, gamma, n, rep))


def _support_metrics(beta_hat: np.ndarray, truth: TruthSpec) -> tuple[float, float]:
    est = np.abs(beta_hat) > SUPPORT_THRESHOLD
    true = np.zeros(beta_hat.size, dtype=bool)
    true[truth.support] = True
    hits = int(np.sum(est & true))
    precision = hits / int(est.sum()) if est.any() else 1.0
    recall = hits / int(true.sum()) if true.any() else 1.0
    return float(precision), float(recall)


def fit_row(
    problem: Problem,
    truth: Optional[TruthSpec],
    estimator: str,
    tau: float,
    lam: float,
    meta: dict,
    sconfig: Optional[SolverConfig] = None,
    record_time: bool = False,
) -> tuple[ResultRow, np.ndarray]:
    """Run one fit and package it as a ResultRow.

    wall_time_ms is recorded only on request: sweep outputs keep it at 0 so
    repeated runs are byte-identical.
    """
    t0 = time.perf_counter()
    try:
        res = fit(problem, HuberConfig(tau=tau, lam=lam), sconfig)
        beta_hat = res.beta_hat
        kkt = res.kkt_residual
        converged = res.converged
    except NumericalError:
        beta_hat = np.full(problem.d, np.nan)
        kkt = float("nan")
        converged = False
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    if truth is not None and np.all(np.isfinite(beta_hat)):
        diff = beta_hat - truth.beta_star
        l1 = float(np.sum(np.abs(diff)))
        l2 = float(np.linalg.norm(diff))
        precision, recall = _support_metrics(beta_hat, truth)
    else:
        l1 = l2 = precision = recall = float("nan")

    row = ResultRow(
        rep=int(meta.get("rep", 0)),
        n=problem.n,
        d=problem.d,
        s=int(meta.get("s", truth.s if truth is not None else 0)),
        delta=float(meta["delta"]),
        gamma=float(meta["gamma"]),
        estimator=estimator,
        tau=float(tau),
        lam=float(lam),
        l1_error=l1,
        l2_error=l2,
        support_precision=precision,
        support_recall=recall,
        kkt_residual=float(kkt),
        converged=converged,
        seed=int(meta.get("seed", 0)),
        wall_time_ms=elapsed_ms if record_time else 0.0,
    )
    return row, beta_hat


def _run_cell_rep(args) -> list[ResultRow]:
    cfg, delta, gamma, n, rep = args
    ds = generate_cell_dataset(cfg, delta, gamma, n, rep)
    problem = ds.problem()
    spec = AdaptiveSpec(
        n=n, d=cfg.d, delta=delta, gamma=gamma, c_tau=cfg.c_tau, c_lambda=cfg.c_lambda
    )
    tau_ahr = select_tau(spec)
    lam = select_lambda(spec)
    rows = []
    for est in cfg.estimators:
        tau = tau_ahr if est == "ahr" else math.inf
        meta = {
            "rep": rep,
            "s": cfg.s,
            "delta": delta,
            "gamma": gamma,
            "seed": ds.seed,
        }
        row, _beta = fit_row(problem, ds.truth, est, tau, lam, meta)
        rows.append(row)
    return rows


def run_sweep(
    cfg: SweepConfig,
    out_path: Optional[str] = None,
    threads: int = 1,
    precondition_threshold: float = 0.5,
    log=None,
) -> list[ResultRow]:
    """All (cell x replicate x estimator) rows in deterministic order.

    Cells iterate delta (outer), gamma, n (inner); replicates and the
    configured estimator order follow inside each cell.  Progress and
    precondition warnings go to stderr.
    """
    log = log if log is not None else sys.stderr
    cells = [
        (delta, gamma, n)
        for delta in cfg.delta_list
        for gamma in cfg.gamma_list
        for n in cfg.n_grid
    ]
    for delta, gamma, n in cells:
        spec = AdaptiveSpec(n=n, d=cfg.d, delta=delta, gamma=gamma)
        pre = consistency_precondition(spec, cfg.s)
        if pre > precondition_threshold:
            print(
                f"warning: cell delta={delta:g} gamma={gamma:g} n={n}: "
                f"precondition {pre:.3f} exceeds {precondition_threshold:g}; "
                "rates may saturate",
                file=log,
            )

    tasks = [
        (cfg, delta, gamma, n, rep)
        for (delta, gamma, n) in cells
        for rep in range(cfg.replicates)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_task = list(pool.map(_run_cell_rep, tasks, chunksize=4))
    else:
        per_task = []
        for k, task in enumerate(tasks):
            per_task.append(_run_cell_rep(task))
            if (k + 1) % 50 == 0 or k + 1 == len(tasks):
                print(f"sweep progress: {k + 1}/{len(tasks)} fits", file=log)

    rows = [row for chunk in per_task for row in chunk]
    if out_path is not None:
        write_results_csv(rows, out_path)
    return rows


def _ols_loglog(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    lx, ly = np.log(xs), np.log(ys)
    mx = lx.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    slope = float(np.sum((lx - mx) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * mx)
    resid = ly - (intercept + slope * lx)
    dof = len(xs) - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else 0.0
    return slope, stderr


def rate_fit(
    rows,
    group_keys: tuple = ("delta", "gamma", "estimator"),
    x: str = "n",
    y: str = "l2_error",
    out_path: Optional[str] = None,
    log=None,
) -> list[dict]:
    """Log-log OLS slope of median y against x per group.

    x is 'n' or 'n_eff' (n discounted by the dependence factor); groups with
    fewer than 3 distinct x values are skipped with a warning.
    """
    log = log if log is not None else sys.stderr
    if x not in ("n", "n_eff"):
        raise InvalidInputError("x must be 'n' or 'n_eff'")
    if y not in ("l1_error", "l2_error"):
        raise InvalidInputError("y must be 'l1_error' or 'l2_error'")
    if isinstance(rows, str):
        rows = read_results_csv(rows)
    recs = [r if isinstance(r, dict) else _row_as_dict(r) for r in rows]

    groups: dict[tuple, dict[float, list[float]]] = {}
    for r in recs:
        yval = r[y]
        if not math.isfinite(yval):
            continue
        key = tuple(r[k] for k in group_keys)
        xval = r["n"] * effective_sample_factor(r["gamma"]) if x == "n_eff" else r["n"]
        groups.setdefault(key, {}).setdefault(float(xval), []).append(float(yval))

    out = []
    for key in sorted(groups):
        pts = groups[key]
        if len(pts) < 3:
            print(f"warning: group {dict(zip(group_keys, key))} has "
                  f"{len(pts)} x values; need 3, skipped", file=log)
            continue
        xs = np.array(sorted(pts))
        med = np.array([float(np.median(pts[v])) for v in xs])
        if np.any(med <= 0):
            print(f"warning: group {dict(zip(group_keys, key))} has zero "
                  "median error; skipped", file=log)
            continue
        slope, stderr = _ols_loglog(xs, med)
        rec = dict(zip(group_keys, key))
        rec.update({"x": x, "y": y, "slope": slope, "stderr": stderr, "points": len(xs)})
        out.append(rec)

    if out_path is not None:
        cols = list(group_keys) + ["x", "y", "slope", "stderr", "points"]
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for rec in out:
                w.writerow(
                    [
                        _fmt(rec[c]) if isinstance(rec[c], float) else str(rec[c])
                        for c in cols
                    ]
                )
    return out


def _row_as_dict(row: ResultRow) -> dict:
    d = {f.name: getattr(row, f.name) for f in fields(ResultRow)}
    d["lambda"] = d.pop("lam")
    return d


def run_diagnose(
    cfg: SweepConfig,
    which,
    out_dir: str,
    epsilon_grid=(0.05, 0.1, 0.2, 0.4),
    lre_radius: float = 1.0,
    log=None,
) -> dict[str, str]:
    """Replica loops for the measured-vs-bound quantities; one CSV per kind.

    Uses the first delta and gamma of the config; 'grad' sweeps the whole
    n_grid, the others use its largest entry.
    """
    from . import diagnostics as dg
    from .markov_sim import moment_vdelta

    log = log if log is not None else sys.stderr
    valid = {"grad", "lre", "cov", "tail", "bernstein"}
    which = set(which)
    if not which <= valid:
        raise InvalidInputError(f"unknown diagnostics {sorted(which - valid)}")
    delta, gamma = cfg.delta_list[0], cfg.gamma_list[0]
    chain, cov, err, truth = make_cell_components(cfg, delta, gamma)
    n_big = max(cfg.n_grid)
    sigma2 = math.sqrt(cov.sigma4)
    written: dict[str, str] = {}

    def spec_for(n):
        return AdaptiveSpec(
            n=n, d=cfg.d, delta=delta, gamma=gamma, c_tau=cfg.c_tau, c_lambda=cfg.c_lambda
        )

    if "grad" in which:
        path = f"{out_dir}/grad.csv"
        de = min(delta, 1.0)
        v = moment_vdelta(err, de)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rep", "n", "d", "delta", "gamma", "tau", "grad_supnorm", "bound"])
            vals = []
            for n in cfg.n_grid:
                tau = select_tau(spec_for(n))
                bound = dg.gradient_supnorm_bound(
                    n, cfg.d, gamma, tau, delta, sigma2, v, C=1.0
                )
                for rep in range(cfg.replicates):
                    ds = generate_cell_dataset(cfg, delta, gamma, n, rep)
                    g = dg.grad_supnorm_at_truth(ds, tau)
                    vals.append(g)
                    w.writerow(
                        [rep, n, cfg.d, _fmt(delta), _fmt(gamma), _fmt(tau), _fmt(g), _fmt(bound)]
                    )
        print(f"grad: median sup-norm {np.median(vals):.6g} over "
              f"{len(vals)} fits -> {path}")
        written["grad"] = path

    if "cov" in which:
        path = f"{out_dir}/cov.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rep", "n", "gamma", "deviation"])
            vals = []
            for rep in range(cfg.replicates):
                ds = generate_cell_dataset(cfg, delta, gamma, n_big, rep)
                dev = dg.covariance_deviation(ds, cov, chain)
                vals.append(dev)
                w.writerow([rep, n_big, _fmt(gamma), _fmt(dev)])
        print(f"cov: median deviation {np.median(vals):.6g} -> {path}")
        written["cov"] = path

    if "tail" in which:
        path = f"{out_dir}/tail.csv"
        tau = select_tau(spec_for(n_big))
        bound = dg.truncated_tail_bound(tau, delta, sigma2, err.v_delta)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rep", "n", "tau", "delta", "tail_sum", "bound"])
            vals = []
            for rep in range(cfg.replicates):
                ds = generate_cell_dataset(cfg, delta, gamma, n_big, rep)
                val = dg.truncated_tail_sum(ds, cov, tau)
                vals.append(val)
                w.writerow([rep, n_big, _fmt(tau), _fmt(delta), _fmt(val), _fmt(bound)])
        print(f"tail: median sum {np.median(vals):.6g} vs bound {bound:.6g} -> {path}")
        written["tail"] = path

    if "lre" in which:
        path = f"{out_dir}/lre.csv"
        tau = select_tau(spec_for(n_big))
        query = dg.LREQuery(r=lre_radius)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rep", "n", "tau", "r", "estimate"])
            vals = []
            for rep in range(cfg.replicates):
                ds = generate_cell_dataset(cfg, delta, gamma, n_big, rep)
                est = dg.lre_estimate(ds, tau, query, seed=ds.seed)
                vals.append(est)
                w.writerow([rep, n_big, _fmt(tau), _fmt(lre_radius), _fmt(est)])
        print(f"lre: median curvature estimate {np.median(vals):.6g} -> {path}")
        written["lre"] = path

    if "bernstein" in which:
        path = f"{out_dir}/bernstein.csv"
        f = np.array([1.0 if a % 2 == 0 else -1.0 for a in range(cfg.m)])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "gamma", "epsilon", "empirical", "bound", "flagged", "replicas"])
            for n in cfg.n_grid:
                rep_seed = derive_seed(cfg.base_seed, "bernstein", cfg.m, float(gamma), n)
                report = dg.bernstein_check(
                    chain, f, n, cfg.replicates, epsilon_grid, seed=rep_seed
                )
                for k, e in enumerate(report.epsilon_grid):
                    w.writerow(
                        [
                            n,
                            _fmt(gamma),
                            _fmt(e),
                            _fmt(report.empirical_tail[k]),
                            _fmt(report.bernstein_bound[k]),
                            "true" if report.flagged[k] else "false",
                            report.replicas,
                        ]
                    )
                worst = int(report.flagged.sum())
                print(f"bernstein: n={n} flagged {worst}/{report.flagged.size} grid points")
        written["bernstein"] = path

    return written
