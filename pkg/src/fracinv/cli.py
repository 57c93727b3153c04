"""Command-line driver for the reference experiments and their parameter sweeps.

Examples
--------
    fracinv --experiment jump --sweep alpha=0.2,0.4,0.6,0.8 --out results/alpha
    fracinv --experiment pwsmooth --compare-penalties --out results/pw
    fracinv --config run.ini --data measurements.txt
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import itertools
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import textio
from .invert import InversionAborted, InversionRun, LmConfig, run
from .mesh import boundary_restriction
from .param import realize
from .synth import ExperimentSpec, Problem, build_problem, get_spec, make_data

log = logging.getLogger("fracinv")

SWEEP_KEYS = {"alpha": float, "beta": float, "gamma": float, "delta": float, "seed": int, "N": int}
LM_KEYS = {"tau": float, "eps": float, "max_iter": int, "workers": int, "step_form": str}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    spec: ExperimentSpec
    lm: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    out: Path = Path("results")
    record_time: bool = False
    compare_penalties: bool = False
    data_file: Path | None = None

    def points(self) -> list[dict]:
        """Cartesian product of the sweep lists, in declaration order."""
        keys = list(self.sweep)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.sweep[k] for k in keys))]


def _coerce(spec: ExperimentSpec, key: str, raw: str):
    kinds = {f.name: f.type for f in dataclasses.fields(ExperimentSpec)}
    if key not in kinds:
        raise ConfigError(f"unknown experiment field {key!r}")
    current = getattr(spec, key)
    raw = raw.strip()
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(current, tuple) or key == "times":
        parts = [p for p in raw.replace(",", " ").split() if p]
        if key == "times" and len(parts) == 1 and ":" in parts[0]:
            start, step, stop = (int(v) for v in parts[0].split(":"))
            return tuple(range(start, stop + 1, step))
        if key == "excitation_set":
            vals = [int(p) for p in parts]
            return tuple(zip(vals[::2], vals[1::2]))
        conv = type(current[0]) if current else float
        return tuple(conv(p) for p in parts)
    if key == "kle_modes":
        return None if raw.lower() in ("none", "") else int(raw)
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def parse_sweep(items: list[str]) -> dict:
    sweep = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"sweep must look like key=v1,v2,... (got {item!r})")
        key, vals = item.split("=", 1)
        key = key.strip()
        if key not in SWEEP_KEYS:
            raise ConfigError(f"cannot sweep {key!r}; choose from {sorted(SWEEP_KEYS)}")
        try:
            sweep[key] = [SWEEP_KEYS[key](float(v)) if SWEEP_KEYS[key] is int else float(v)
                          for v in vals.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad sweep values for {key}: {exc}") from exc
        if not sweep[key]:
            raise ConfigError(f"empty sweep list for {key}")
    return sweep


def load_config(args: argparse.Namespace) -> RunConfig:
    ini = configparser.ConfigParser()
    ini.optionxform = str  # keep "N" distinct from "n"
    if args.config:
        if not Path(args.config).exists():
            raise ConfigError(f"config file {args.config} not found")
        ini.read(args.config)
    name = args.experiment or ini.get("experiment", "name", fallback=None)
    if not name:
        raise ConfigError("no experiment given (use --experiment or [experiment] name=)")
    try:
        spec = get_spec(name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc

    changes = {}
    if ini.has_section("experiment"):
        for key, raw in ini.items("experiment"):
            if key != "name":
                changes[key] = _coerce(spec, key, raw)
    for item in args.set or []:
        key, _, raw = item.partition("=")
        changes[key.strip()] = _coerce(spec, key.strip(), raw)
    if args.seed is not None:
        changes["seed"] = args.seed
    try:
        spec = spec.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    lm = {}
    if ini.has_section("lm"):
        for key, raw in ini.items("lm"):
            if key not in LM_KEYS:
                raise ConfigError(f"unknown [lm] key {key!r}")
            lm[key] = LM_KEYS[key](raw.strip())
    if args.step_form:
        lm["step_form"] = args.step_form
    if args.max_iter:
        lm["max_iter"] = args.max_iter

    sweep = {}
    if ini.has_section("sweep"):
        sweep.update(parse_sweep([f"{k}={v}" for k, v in ini.items("sweep")]))
    sweep.update(parse_sweep(args.sweep or []))

    out = Path(args.out or ini.get("output", "out", fallback="results"))
    record_time = args.record_time or ini.getboolean("output", "record_time", fallback=False)
    data_file = Path(args.data) if args.data else None
    return RunConfig(spec, lm, sweep, out, record_time, args.compare_penalties, data_file)


def data_seed(spec: ExperimentSpec, base_seed: int) -> int:
    """Base seed plus a hash of the data-determining sweep values.

    Penalty weights are left out so that regularisation sweeps share data.
    """
    key = f"{spec.name}|{spec.alpha!r}|{spec.delta!r}|{spec.n_experiments}".encode()
    digest = int.from_bytes(hashlib.sha256(key).digest()[:4], "little")
    return (int(base_seed) + digest) % 2**32


def point_spec(base: ExperimentSpec, point: dict) -> ExperimentSpec:
    changes = {k: v for k, v in point.items() if k in ("alpha", "beta", "gamma", "delta", "seed")}
    if "N" in point:
        changes["n_experiments"] = point["N"]
    return base.replace(**changes)


def point_tag(spec: ExperimentSpec, label: str | None = None) -> str:
    tag = (f"{spec.name}_a{spec.alpha:g}_b{spec.beta:g}_g{spec.gamma:g}"
           f"_d{spec.delta:g}_s{spec.seed}_N{spec.n_experiments}")
    return f"{tag}_{label}" if label else tag


def external_data(problem: Problem, path: Path) -> np.ndarray:
    """Load measurements in the ``experiment time_index edge_index value`` format."""
    table = textio.read_data(path)
    edges, _ = boundary_restriction(problem.mesh, problem.region)
    expected = textio.data_table(np.zeros(problem.data_length()), len(problem.excitations), problem.times, edges)
    for col in ("experiment", "time_index", "edge_index"):
        if not np.array_equal(getattr(table, col), getattr(expected, col)):
            raise ConfigError(f"{path}: {col} labels do not match the configured experiment")
    return table.value


def lm_config(problem: Problem, lm: dict, beta: float, gamma: float) -> LmConfig:
    if beta == 0 and gamma == 0 and problem.spec.kind == "strip":
        raise ConfigError("strip inversion needs beta > 0 or gamma > 0 (Jacobian may be rank deficient)")
    return LmConfig(penalty=problem.penalty(beta, gamma), **lm)


def write_outputs(out_dir: Path, problem: Problem, result: InversionRun, header: dict, record_time: bool) -> None:
    textio.write_iteration_log(out_dir / "iterations.log", textio.log_rows(result, record_time), header)
    q_inv = realize(problem.param, result.a_final)
    textio.write_field(out_dir / "q_inv.txt", problem.mesh, q_inv, header, "q_value")
    textio.write_field(out_dir / "q_true.txt", problem.mesh, problem.q_true, header, "q_value")


def invert_point(cfg: RunConfig, spec: ExperimentSpec, base_seed: int, penalties=None) -> list[textio.SummaryRow]:
    """Generate (or load) data once, then run one inversion per penalty setting."""
    seed = data_seed(spec, base_seed)
    data_spec = spec.replace(seed=seed)
    problem = build_problem(data_spec)
    if cfg.data_file is not None:
        noisy = external_data(problem, cfg.data_file)
    else:
        _, noisy = make_data(data_spec, problem)
    penalties = penalties or [(None, spec.beta, spec.gamma)]
    edges, _ = boundary_restriction(problem.mesh, problem.region)
    data_hash = hashlib.sha256(np.ascontiguousarray(noisy).tobytes()).hexdigest()[:16]

    rows = []
    for label, beta, gamma in penalties:
        shown = spec.replace(beta=beta, gamma=gamma, seed=base_seed)
        tag = point_tag(shown, label)
        out_dir = cfg.out / tag
        header = {"experiment": spec.name, "base_seed": base_seed, "data_seed": seed,
                  "alpha": repr(spec.alpha), "beta": repr(beta), "gamma": repr(gamma),
                  "delta": repr(spec.delta), "N": spec.n_experiments, "data_sha256": data_hash}
        textio.write_data(out_dir / "data.txt",
                          textio.data_table(noisy, len(problem.excitations), problem.times, edges), header)
        config = lm_config(problem, cfg.lm, beta, gamma)
        try:
            result = run(config, problem, noisy, truth=problem.q_true)
        except InversionAborted as exc:
            write_outputs(out_dir, problem, exc.run, header, cfg.record_time)
            raise
        write_outputs(out_dir, problem, result, header, cfg.record_time)
        name = spec.name if label is None else f"{spec.name}-{label}"
        row = textio.SummaryRow(name, spec.alpha, beta, gamma, spec.delta, base_seed,
                                spec.n_experiments, result.iterations, result.final_error)
        textio.upsert_summary(cfg.out / "summary.txt", row)
        log.info("%s: %d iterations, epsilon=%.4f (%s)", tag, result.iterations, result.final_error,
                 result.termination)
        rows.append(row)
    return rows


def compare_penalties(cfg: RunConfig, spec: ExperimentSpec, base_seed: int) -> list[textio.SummaryRow]:
    """L2 only, BV only and L2+BV inversions of one shared data set."""
    if spec.beta == 0 and spec.gamma == 0:
        raise ConfigError("penalty comparison needs nonzero beta and gamma")
    return invert_point(cfg, spec, base_seed, penalties=[
        ("l2", spec.beta, 0.0),
        ("bv", 0.0, spec.gamma),
        ("l2+bv", spec.beta, spec.gamma),
    ])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracinv", description=__doc__.split("\n")[0])
    p.add_argument("--experiment", help="named experiment: smooth, jump or pwsmooth")
    p.add_argument("--config", help="INI file with [experiment], [lm], [sweep], [output] sections")
    p.add_argument("--sweep", action="append", metavar="KEY=V1,V2,...",
                   help="sweep alpha, beta, gamma, delta, seed or N; repeatable")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--data", help="invert measurements from this file instead of synthesising them")
    p.add_argument("--set", action="append", metavar="FIELD=VALUE", help="override an experiment field")
    p.add_argument("--compare-penalties", action="store_true", help="run L2, BV and L2+BV on shared data")
    p.add_argument("--step-form", choices=["damped", "gradient"])
    p.add_argument("--max-iter", type=int)
    p.add_argument("--record-time", action="store_true",
                   help="write wall-clock seconds to iteration logs (makes them non-reproducible)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        cfg.out.mkdir(parents=True, exist_ok=True)
        for point in cfg.points() or [{}]:
            spec = point_spec(cfg.spec, point)
            base_seed = point.get("seed", cfg.spec.seed)
            if cfg.compare_penalties:
                rows = compare_penalties(cfg, spec, base_seed)
            else:
                rows = invert_point(cfg, spec, base_seed)
            for row in rows:
                print(row.format())
    except ConfigError as exc:
        print(f"fracinv: configuration error: {exc}", file=sys.stderr)
        return 2
    except InversionAborted as exc:
        print(f"fracinv: inversion aborted: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())
