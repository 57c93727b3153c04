"""Relative error of the jump reconstruction for several BV weights.

All gamma values see the same noisy data for a given seed, so the table
isolates the effect of the regularisation weight.

    python scripts/gamma_sweep.py --seeds 5 --out results/gamma
"""

import argparse
from pathlib import Path

import numpy as np

from fracinv import textio
from fracinv.invert import LmConfig, run
from fracinv.synth import build_problem, get_spec, make_data


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--gammas", default="5e-2,5e-3,5e-4,5e-5")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--out", default="results/gamma")
    args = p.parse_args()
    out = Path(args.out)
    gammas = [float(g) for g in args.gammas.split(",")]

    errs = {g: [] for g in gammas}
    finals = {g: [] for g in gammas}
    for seed in range(args.seeds):
        spec = get_spec("jump").replace(seed=seed)
        problem = build_problem(spec)
        _, noisy = make_data(spec, problem)
        for g in gammas:
            res = run(LmConfig(penalty=problem.penalty(gamma=g)), problem, noisy, truth=problem.q_true)
            errs[g].append(res.final_error)
            finals[g].append(res.a_final)
            textio.upsert_summary(out / "summary.txt", textio.SummaryRow(
                "jump", spec.alpha, 0.0, g, spec.delta, seed, 1, res.iterations, res.final_error))

    print(f"{'gamma':>6}  {'median a':<70} {'median eps':>10}")
    for g in gammas:
        a_med = np.median(finals[g], axis=0)
        print(f"{g:>6g}  ({', '.join(f'{v:.4f}' for v in a_med)}) {np.median(errs[g]):>10.4f}")
    best = min(gammas, key=lambda g: np.median(errs[g]))
    print(f"smallest median error at gamma = {best:g}")


if __name__ == "__main__":
    main()
