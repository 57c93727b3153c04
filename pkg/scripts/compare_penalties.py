"""Piecewise-smooth reconstructions under each penalty, compared on shared data.

For each seed the three inversions share one noisy data set.  Prints the
per-seed errors and writes the three reconstructed strip profiles of the
first seed as columns ``x q_true q_l2 q_bv q_l2bv`` for plotting.

    python scripts/compare_penalties.py --seeds 5 --out results/penalties
"""

import argparse
from pathlib import Path

import numpy as np

from fracinv.invert import LmConfig, run
from fracinv.synth import build_problem, get_spec, make_data

LABELS = ("l2", "bv", "l2+bv")


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--out", default="results/penalties")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    errs = {k: [] for k in LABELS}
    for seed in range(args.seeds):
        spec = get_spec("pwsmooth").replace(seed=seed)
        problem = build_problem(spec)
        _, noisy = make_data(spec, problem)
        weights = {"l2": (spec.beta, 0.0), "bv": (0.0, spec.gamma), "l2+bv": (spec.beta, spec.gamma)}
        profiles = []
        for label in LABELS:
            res = run(LmConfig(penalty=problem.penalty(*weights[label])), problem, noisy, truth=problem.q_true)
            errs[label].append(res.final_error)
            profiles.append(res.a_final)
        print(f"seed {seed}: " + "  ".join(f"{k} {errs[k][-1]:.4f}" for k in LABELS))
        if seed == 0:
            n = problem.param.dim
            x = (np.arange(n) + 0.5) / n
            q_true = np.array([problem.q_true[problem.param.region_of == i].mean() for i in range(n)])
            np.savetxt(out / "profiles.txt", np.column_stack([x, q_true, *profiles]),
                       fmt="%.6f", header="x q_true q_l2 q_bv q_l2bv")
    print("median: " + "  ".join(f"{k} {np.median(errs[k]):.4f}" for k in LABELS))


if __name__ == "__main__":
    main()
