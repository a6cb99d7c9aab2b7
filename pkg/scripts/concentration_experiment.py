"""Measured-vs-bound diagnostics for the concentration machinery.

Runs the replica diagnostics (truncated-gradient sup-norm, covariance
deviation, truncation tail, Bernstein-type tail bound) for one
(delta, gamma) cell and writes their CSVs under --out.
"""

import argparse
from pathlib import Path

from markov_huber import SweepConfig, run_diagnose


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/diagnostics")
    ap.add_argument("--which", default="grad,cov,tail,bernstein")
    ap.add_argument("--n-grid", default="250,500,1000,2000")
    ap.add_argument("--replicates", type=int, default=50)
    ap.add_argument("--delta", type=float, default=1.0)
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--family", default="student-t(5)")
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--d", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = SweepConfig(
        n_grid=tuple(int(v) for v in args.n_grid.split(",")), d=args.d, s=5,
        delta_list=(args.delta,), gamma_list=(args.gamma,),
        replicates=args.replicates, family=args.family,
        base_seed=args.seed, m=args.m,
    )
    written = run_diagnose(cfg, which=args.which.split(","), out_dir=str(out))
    for kind, path in written.items():
        print(f"{kind}: {path}")


if __name__ == "__main__":
    main()
