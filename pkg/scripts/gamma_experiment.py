"""Dependence-cost experiment.

Part 1: median l2 error vs the chain's spectral parameter gamma at fixed n.
Part 2: the same error curves for two gamma values, replotted against
n_eff = n * (1-gamma)/(1+gamma); if the discount is right the dependent
curve lands on the independent one.
"""

import argparse
import collections
from pathlib import Path

import numpy as np

from markov_huber import (
    SweepConfig,
    effective_sample_factor,
    run_sweep,
    write_results_csv,
)


def median_by(rows, key):
    acc = collections.defaultdict(list)
    for r in rows:
        acc[getattr(r, key)].append(r.l2_error)
    return {k: float(np.median(v)) for k, v in sorted(acc.items())}


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/gamma")
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--n-grid", default="250,500,1000,2000")
    ap.add_argument("--replicates", type=int, default=20)
    ap.add_argument("--d", type=int, default=100)
    ap.add_argument("--s", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg_fixed = SweepConfig(
        n_grid=(args.n,), d=args.d, s=args.s, delta_list=(1.0,),
        gamma_list=(0.0, 0.3, 0.5, 0.7, 0.9), replicates=args.replicates,
        family="student-t(5)", base_seed=args.seed,
    )
    rows_fixed = run_sweep(cfg_fixed)
    write_results_csv(rows_fixed, str(out / "gamma_sweep.csv"))
    print(f"median l2 error at n={args.n}:")
    for g, med in median_by(rows_fixed, "gamma").items():
        print(f"  gamma={g:g}  {med:.4f}")

    n_grid = tuple(int(v) for v in args.n_grid.split(","))
    cfg_curves = SweepConfig(
        n_grid=n_grid, d=args.d, s=args.s, delta_list=(1.0,),
        gamma_list=(0.0, 0.5), replicates=args.replicates,
        family="student-t(5)", base_seed=args.seed,
    )
    rows_curves = run_sweep(cfg_curves)
    write_results_csv(rows_curves, str(out / "collapse_sweep.csv"))

    print("\ncollapse check (same rows, two x-axes):")
    print(f"{'gamma':>6} {'n':>6} {'n_eff':>8} {'median_l2':>10}")
    for g in (0.0, 0.5):
        meds = median_by([r for r in rows_curves if r.gamma == g], "n")
        for n, med in meds.items():
            print(f"{g:>6g} {n:>6d} {n * effective_sample_factor(g):>8.1f} {med:>10.4f}")
    print(f"wrote {out / 'gamma_sweep.csv'} and {out / 'collapse_sweep.csv'}")


if __name__ == "__main__":
    main()
