"""Command line front end.

Subcommands: simulate, fit, sweep, rates, diagnose.  Global flags --config,
--seed, --out, --threads work on every subcommand.  Config files are flat
`key = value` text; list values are comma-separated.  Exit codes: 0 success,
1 usage or config error, 2 solver non-convergence in `fit`.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from .adaptive import AdaptiveSpec, select_lambda, select_tau
from .errors import InvalidInputError
from .markov_sim import load_dataset, load_meta, save_dataset
from .sweep import (
    SweepConfig,
    fit_row,
    generate_cell_dataset,
    rate_fit,
    run_diagnose,
    run_sweep,
    write_results_csv,
)


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


class UsageError(Exception):
    pass


def read_config(path: str) -> dict[str, str]:
    conf: dict[str, str] = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected 'key = value'")
                key, _, val = line.partition("=")
                conf[key.strip()] = val.strip()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from e
    return conf


def _get(conf, key, cast, default=None, required=False):
    if key not in conf:
        if required:
            raise UsageError(f"config key '{key}' is required")
        return default
    try:
        return cast(conf[key])
    except (TypeError, ValueError) as e:
        raise UsageError(f"config key '{key}': {e}") from e


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v.strip()) for v in text.split(",") if v.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v.strip()) for v in text.split(",") if v.strip())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _sweep_config(conf: dict, seed_override) -> SweepConfig:
    base_seed = seed_override if seed_override is not None else _get(conf, "base_seed", int, 0)
    try:
        return SweepConfig(
            n_grid=_get(conf, "n_grid", _int_list, required=True),
            d=_get(conf, "d", int, required=True),
            s=_get(conf, "s", int, required=True),
            delta_list=_get(conf, "delta_list", _float_list, required=True),
            gamma_list=_get(conf, "gamma_list", _float_list, required=True),
            replicates=_get(conf, "replicates", int, required=True),
            family=_get(conf, "family", str, "gaussian"),
            c_tau=_get(conf, "c_tau", float, 1.0),
            c_lambda=_get(conf, "c_lambda", float, 1.0),
            base_seed=base_seed,
            estimators=_get(conf, "estimators", _str_list, ("ahr",)),
            m=_get(conf, "m", int, 50),
        )
    except InvalidInputError as e:
        raise UsageError(str(e)) from e


def _single_cell_config(conf: dict, seed_override) -> SweepConfig:
    """simulate/fit configs name one cell: n, delta, gamma instead of grids."""
    single = dict(conf)
    if "n" in single and "n_grid" not in single:
        single["n_grid"] = single["n"]
    if "delta" in single and "delta_list" not in single:
        single["delta_list"] = single["delta"]
    if "gamma" in single and "gamma_list" not in single:
        single["gamma_list"] = single["gamma"]
    single.setdefault("replicates", "1")
    cfg = _sweep_config(single, seed_override)
    if len(cfg.n_grid) != 1 or len(cfg.delta_list) != 1 or len(cfg.gamma_list) != 1:
        raise UsageError("this command takes single n, delta, gamma values")
    return cfg


def _cmd_simulate(args) -> int:
    conf = read_config(args.config) if args.config else {}
    cfg = _single_cell_config(conf, args.seed)
    rep = _get(conf, "rep", int, 0)
    ds = generate_cell_dataset(cfg, cfg.delta_list[0], cfg.gamma_list[0], cfg.n_grid[0], rep)
    path = os.path.join(args.out, "dataset.csv")
    save_dataset(ds, path)
    print(f"wrote {path} and {path}.meta (n={ds.n}, d={ds.d})")
    return 0


def _cmd_fit(args) -> int:
    conf = read_config(args.config) if args.config else {}
    c_tau = args.c_tau if args.c_tau is not None else _get(conf, "c_tau", float, 1.0)
    c_lambda = (
        args.c_lambda if args.c_lambda is not None else _get(conf, "c_lambda", float, 1.0)
    )

    if args.data:
        try:
            ds = load_dataset(args.data)
        except OSError as e:
            print(f"error: cannot read {args.data}: {e}", file=sys.stderr)
            return 1
        meta = load_meta(args.data)
        delta = _get(conf, "delta", float, meta.get("delta"))
        gamma = _get(conf, "gamma", float, meta.get("gamma"))
        seed = meta.get("seed", 0)
        s = ds.truth.s if ds.truth is not None else 0
    else:
        cfg = _single_cell_config(conf, args.seed)
        delta, gamma = cfg.delta_list[0], cfg.gamma_list[0]
        rep = _get(conf, "rep", int, 0)
        ds = generate_cell_dataset(cfg, delta, gamma, cfg.n_grid[0], rep)
        seed = ds.seed
        s = cfg.s

    manual = args.tau is not None or args.lam is not None
    if manual and (args.tau is None or args.lam is None):
        raise UsageError("--tau and --lambda must be given together")
    if manual and args.adaptive:
        raise UsageError("--adaptive conflicts with --tau/--lambda")
    if manual:
        tau, lam = args.tau, args.lam
    else:
        if delta is None or gamma is None:
            raise UsageError(
                "adaptive parameters need delta and gamma (from config or sidecar)"
            )
        spec = AdaptiveSpec(
            n=ds.n, d=ds.d, delta=delta, gamma=gamma, c_tau=c_tau, c_lambda=c_lambda
        )
        tau, lam = select_tau(spec), select_lambda(spec)

    meta_row = {
        "rep": 0,
        "s": s,
        "delta": delta if delta is not None else float("nan"),
        "gamma": gamma if gamma is not None else float("nan"),
        "seed": seed,
    }
    estimator = "lasso" if math.isinf(tau) else "ahr"
    row, beta_hat = fit_row(
        ds.problem(), ds.truth, estimator, tau, lam, meta_row, record_time=True
    )
    out_csv = os.path.join(args.out, "fit.csv")
    write_results_csv([row], out_csv)
    beta_path = os.path.join(args.out, "beta_hat.csv")
    with open(beta_path, "w", newline="") as fh:
        fh.write("j,beta_j\n")
        for j, b in enumerate(beta_hat, start=1):
            fh.write(f"{j},{format(float(b), '.17g')}\n")
    status = "converged" if row.converged else "NOT converged"
    print(
        f"{estimator} fit on n={ds.n}, d={ds.d}: tau={tau:.6g} lambda={lam:.6g} "
        f"kkt={row.kkt_residual:.3e} ({status}); wrote {out_csv}, {beta_path}"
    )
    return 0 if row.converged else 2


def _cmd_sweep(args) -> int:
    if not args.config:
        raise UsageError("sweep requires --config")
    cfg = _sweep_config(read_config(args.config), args.seed)
    out_csv = os.path.join(args.out, "results.csv")
    rows = run_sweep(cfg, out_path=out_csv, threads=args.threads)
    print(f"wrote {out_csv} ({len(rows)} rows)")
    return 0


def _cmd_rates(args) -> int:
    out_csv = os.path.join(args.out, "slopes.csv")
    try:
        table = rate_fit(
            args.input,
            group_keys=tuple(args.group.split(",")),
            x=args.x,
            y=args.y,
            out_path=out_csv,
        )
    except OSError as e:
        print(f"error: cannot read {args.input}: {e}", file=sys.stderr)
        return 1
    for rec in table:
        keys = ", ".join(f"{k}={rec[k]}" for k in args.group.split(","))
        print(f"{keys}: slope {rec['slope']:+.4f} (se {rec['stderr']:.4f}, "
              f"{rec['points']} points)")
    print(f"wrote {out_csv} ({len(table)} groups)")
    return 0


def _cmd_diagnose(args) -> int:
    if not args.config:
        raise UsageError("diagnose requires --config")
    conf = read_config(args.config)
    cfg = _sweep_config(conf, args.seed)
    which = set(_str_list(args.which))
    eps_grid = _get(conf, "epsilon_grid", _float_list, (0.05, 0.1, 0.2, 0.4))
    lre_radius = _get(conf, "r", float, 1.0)
    written = run_diagnose(
        cfg, which, args.out, epsilon_grid=eps_grid, lre_radius=lre_radius
    )
    print(f"wrote {len(written)} diagnostic file(s) to {args.out}")
    return 0


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, default=None, help="override base_seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker processes")

    p = _Parser(prog="markov-huber", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", parents=[common], help="write one dataset CSV + sidecar")
    sp.set_defaults(func=_cmd_simulate)

    fp = sub.add_parser("fit", parents=[common], help="fit one dataset, write a result row")
    fp.add_argument("--data", help="dataset CSV (defaults to generating from config)")
    fp.add_argument("--adaptive", action="store_true",
                    help="use the data-size tuning rules (default)")
    fp.add_argument("--tau", type=float, default=None, help="manual loss threshold")
    fp.add_argument("--lambda", dest="lam", type=float, default=None, help="manual penalty")
    fp.add_argument("--c-tau", dest="c_tau", type=float, default=None)
    fp.add_argument("--c-lambda", dest="c_lambda", type=float, default=None)
    fp.set_defaults(func=_cmd_fit)

    wp = sub.add_parser("sweep", parents=[common], help="run a replicated parameter sweep")
    wp.set_defaults(func=_cmd_sweep)

    rp = sub.add_parser("rates", parents=[common], help="fit log-log slopes from results CSV")
    rp.add_argument("--in", dest="input", required=True, help="results CSV path")
    rp.add_argument("--x", choices=("n", "n_eff"), default="n")
    rp.add_argument("--y", choices=("l1_error", "l2_error"), default="l2_error")
    rp.add_argument("--group", default="delta,gamma,estimator",
                    help="comma-separated group-by keys")
    rp.set_defaults(func=_cmd_rates)

    dp = sub.add_parser("diagnose", parents=[common], help="measured-vs-bound diagnostics")
    dp.add_argument("--which", default="grad,cov,tail,bernstein",
                    help="subset of grad,lre,cov,tail,bernstein")
    dp.set_defaults(func=_cmd_diagnose)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        os.makedirs(args.out, exist_ok=True)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except InvalidInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
