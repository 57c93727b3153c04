"""Error-versus-iteration curves of the smooth (KLE) reconstruction for N = 1, 3, 5.

Writes one whitespace-delimited file with columns ``k eps_N1 eps_N3 eps_N5``
(medians over seeds, padded with the final value) for plotting.

    python scripts/smooth_convergence.py --seeds 5 --out results/smooth_convergence.txt
"""

import argparse
from pathlib import Path

import numpy as np

from fracinv.invert import LmConfig, run
from fracinv.synth import build_problem, get_spec, make_data


def curves(n_experiments: int, seeds: int, length: int) -> np.ndarray:
    rows = []
    for seed in range(seeds):
        spec = get_spec("smooth").replace(seed=seed, n_experiments=n_experiments)
        problem = build_problem(spec)
        _, noisy = make_data(spec, problem)
        res = run(LmConfig(penalty=problem.penalty()), problem, noisy, truth=problem.q_true)
        e = list(res.errors)[:length]
        rows.append(e + [e[-1]] * (length - len(e)))
    return np.median(rows, axis=0)


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--out", default="results/smooth_convergence.txt")
    args = p.parse_args()

    ns = (1, 3, 5)
    table = np.column_stack([np.arange(args.iterations)] + [curves(n, args.seeds, args.iterations) for n in ns])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(out, table, fmt=["%d"] + ["%.6f"] * len(ns), header="k " + " ".join(f"eps_N{n}" for n in ns))
    for n, col in zip(ns, table[:, 1:].T):
        print(f"N={n}: eps after 1, 5, {args.iterations - 1} iterations = "
              f"{col[1]:.4f}, {col[5]:.4f}, {col[-1]:.4f}")


if __name__ == "__main__":
    main()
