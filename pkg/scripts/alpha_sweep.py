"""Relative error of the jump reconstruction for several fractional orders.

Runs the ``jump`` experiment for alpha in {0.2, 0.4, 0.6, 0.8} over a few
noise seeds and prints the median error per alpha next to the median
reconstructed block values.

    python scripts/alpha_sweep.py --seeds 5 --out results/alpha
"""

import argparse
from pathlib import Path

import numpy as np

from fracinv import textio
from fracinv.invert import LmConfig, run
from fracinv.synth import build_problem, get_spec, make_data


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--alphas", default="0.2,0.4,0.6,0.8")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--out", default="results/alpha")
    args = p.parse_args()
    out = Path(args.out)

    print(f"{'alpha':>6}  {'median a':<70} {'median eps':>10}")
    for alpha in (float(a) for a in args.alphas.split(",")):
        finals, errs = [], []
        for seed in range(args.seeds):
            spec = get_spec("jump").replace(alpha=alpha, seed=seed)
            problem = build_problem(spec)
            _, noisy = make_data(spec, problem)
            res = run(LmConfig(penalty=problem.penalty()), problem, noisy, truth=problem.q_true)
            finals.append(res.a_final)
            errs.append(res.final_error)
            textio.upsert_summary(out / "summary.txt", textio.SummaryRow(
                "jump", alpha, spec.beta, spec.gamma, spec.delta, seed, 1, res.iterations, res.final_error))
        a_med = np.median(finals, axis=0)
        print(f"{alpha:>6g}  ({', '.join(f'{v:.4f}' for v in a_med)}) {np.median(errs):>10.4f}")


if __name__ == "__main__":
    main()
