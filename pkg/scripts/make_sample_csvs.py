"""Regenerate the CSV fixtures consumed by the report renderer.

Everything is seeded and grid-fixed, so reruns are byte-identical. Kept
deliberately small: the files are repo fixtures, not experiment output.
"""

import tempfile
from pathlib import Path

from markov_huber import SweepConfig, rate_fit, run_diagnose, run_sweep

SAMPLES = Path(__file__).resolve().parent.parent / "report" / "samples"


def main() -> None:
    SAMPLES.mkdir(parents=True, exist_ok=True)

    # error-vs-n rows over a (delta, gamma) grid; 8 cells, 5 reps each
    sweep_cfg = SweepConfig(
        n_grid=(200, 400, 800), d=30, s=3,
        delta_list=(0.5, 1.0), gamma_list=(0.0, 0.3, 0.6, 0.9),
        replicates=5, family="student-t(5)", base_seed=2024,
    )
    run_sweep(sweep_cfg, out_path=str(SAMPLES / "sweep.csv"))

    # fitted slopes across the tail-index grid, including both flat arms;
    # gamma=0 and larger n keep the cells out of the saturated regime, and
    # the default m=50 states keep the rank of the state-indexed design
    # above s*log(d) so the sparse recovery is identified
    slope_cfg = SweepConfig(
        n_grid=(250, 500, 1000, 2000), d=30, s=3,
        delta_list=(0.3, 0.5, 1.0, 2.0), gamma_list=(0.0,),
        replicates=10, family="student-t(5)", base_seed=2025,
    )
    rate_fit(run_sweep(slope_cfg), out_path=str(SAMPLES / "slopes.csv"))

    # tail-probability vs bound for a two-state chain at three mixing levels;
    # run_diagnose handles one gamma per call, so merge the per-gamma files
    merged: list[str] = []
    for gamma in (0.0, 0.5, 0.9):
        cfg = SweepConfig(
            n_grid=(100, 400), d=8, s=2, delta_list=(1.0,),
            gamma_list=(gamma,), replicates=2000,
            family="gaussian", base_seed=2026, m=2,
        )
        with tempfile.TemporaryDirectory() as tmp:
            run_diagnose(cfg, which=("bernstein",), out_dir=tmp,
                         epsilon_grid=(0.05, 0.1, 0.2))
            lines = (Path(tmp) / "bernstein.csv").read_text().splitlines()
        if not merged:
            merged.append(lines[0])
        merged.extend(lines[1:])
    (SAMPLES / "bernstein.csv").write_text("\n".join(merged) + "\n")

    for name in ("sweep.csv", "slopes.csv", "bernstein.csv"):
        print(f"wrote {SAMPLES / name}")


if __name__ == "__main__":
    main()
