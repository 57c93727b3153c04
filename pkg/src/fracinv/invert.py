"""Regularised Levenberg-Marquardt reconstruction of the reaction field."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .forward import ForwardSolveError, dirichlet_to_neumann
from .param import Kind, realize
from .regpen import Penalty, l2_matrix, penalty_matrices
from .synth import Problem

log = logging.getLogger(__name__)

STEP_SMALL = "step-small"
MAX_ITERATIONS = "max-iterations"
SOLVER_FAILURE = "solver-failure"


@dataclass
class LmConfig:
    """Settings of one L-M run.

    ``step_form="damped"`` solves ``(G^T G + beta I + gamma (L1 + L2)) h = G^T F``,
    where the penalty only damps the step.  ``"gradient"`` also subtracts
    ``(beta I + gamma (L1 + L2)) a`` on the right, i.e. a Gauss-Newton step for
    ``1/2 |F|^2 + beta/2 |a|^2 + gamma * BV_eps(a)``.
    """

    penalty: Penalty = field(default_factory=Penalty)
    tau: float = 0.5
    eps: float = 1e-4
    max_iter: int = 50
    a0: np.ndarray | None = None
    workers: int = 1
    step_form: str = "damped"

    def __post_init__(self):
        if self.tau <= 0 or self.eps <= 0:
            raise ValueError("tau and eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.step_form not in ("damped", "gradient"):
            raise ValueError(f"unknown step form {self.step_form!r}")


@dataclass
class InversionRun:
    iterates: list = field(default_factory=list)
    residual_norms: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    termination: str | None = None
    wall_time: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.step_norms)

    @property
    def a_final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def final_error(self) -> float:
        return self.errors[-1] if self.errors else float("nan")


class InversionAborted(RuntimeError):
    def __init__(self, message: str, run: InversionRun):
        super().__init__(message)
        self.run = run


def forward_map(problem: Problem, a) -> np.ndarray:
    q = realize(problem.param, a)
    return dirichlet_to_neumann(
        problem.mesh, q, problem.excitations, problem.scheme, problem.region, problem.times
    )


def residual(a, problem: Problem, data) -> np.ndarray:
    """``F_k = data - forward(a)``."""
    data = np.asarray(data, dtype=float)
    pred = forward_map(problem, a)
    if pred.shape != data.shape:
        raise ValueError(f"data has {data.size} entries, forward map gives {pred.size}")
    return data - pred


def fd_jacobian(a, problem: Problem, tau: float = 0.5, base=None, workers: int = 1, fmap=None) -> np.ndarray:
    """Forward-difference Jacobian of the forward map (not of the residual).

    Column ``j`` is ``(f(a + tau e_j) - f(a)) / tau``.  Columns are
    independent solves; ``workers > 1`` evaluates them on a thread pool.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    fmap = fmap or (lambda x: forward_map(problem, x))
    a = np.asarray(a, dtype=float)
    if base is None:
        base = fmap(a)

    def column(j):
        shifted = a.copy()
        shifted[j] += tau
        return (fmap(shifted) - base) / tau

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(column, range(a.size)))
    else:
        cols = [column(j) for j in range(a.size)]
    return np.column_stack(cols)


def lm_step(G0, F, penalty: Penalty, a_k, step_form: str = "damped") -> np.ndarray:
    """Solve for the L-M increment ``h``.

    Parameters
    ----------
    G0 : (m, n) array
        Jacobian of the forward map at ``a_k``.
    F : (m,) array
        Residual ``data - forward(a_k)``.
    penalty : Penalty
        Supplies ``beta``, ``gamma`` and the lagged matrices at ``a_k``.
    a_k : (n,) array
        Current iterate.
    step_form : {"damped", "gradient"}
        ``"damped"`` is the bare system with right-hand side ``G0^T F``;
        ``"gradient"`` subtracts the penalty gradient at ``a_k`` as well.
        :class:`LmConfig` uses ``"damped"`` unless told otherwise.
    """
    G0 = np.asarray(G0, dtype=float)
    F = np.asarray(F, dtype=float)
    a_k = np.asarray(a_k, dtype=float)
    n = G0.shape[1]
    if G0.shape[0] != F.size or a_k.size != n:
        raise ValueError("inconsistent shapes in lm_step")
    reg = penalty.beta * l2_matrix(penalty, n)
    if penalty.gamma:
        L1, L2 = penalty_matrices(penalty, a_k)
        reg = reg + penalty.gamma * (L1 + L2)
    lhs = G0.T @ G0 + reg
    rhs = G0.T @ F
    if step_form == "gradient":
        rhs = rhs - reg @ a_k
    try:
        factor = cho_factor(lhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "L-M system is not positive definite; is the Jacobian rank deficient with beta = gamma = 0?"
        ) from exc
    return cho_solve(factor, rhs)


def relative_error(q_inv, q_true, cell_areas=None) -> float:
    """Cell-area-weighted ``||q_inv - q_true|| / ||q_true||`` in L2."""
    q_inv = np.asarray(q_inv, dtype=float)
    q_true = np.asarray(q_true, dtype=float)
    if q_inv.shape != q_true.shape:
        raise ValueError("fields live on different meshes")
    w = np.ones_like(q_true) if cell_areas is None else np.asarray(cell_areas, dtype=float)
    denom = float(np.sqrt(np.sum(w * q_true**2)))
    if denom == 0.0:
        raise ValueError("true field has zero norm")
    return float(np.sqrt(np.sum(w * (q_inv - q_true) ** 2))) / denom


def _project(problem: Problem, a: np.ndarray) -> np.ndarray:
    if problem.param.kind is Kind.KLE:
        return a
    return np.clip(a, *problem.param.bounds)


def run(config: LmConfig, problem: Problem, data, truth=None, fmap=None) -> InversionRun:
    """Iterate ``a_{k+1} = a_k + h_k`` until ``||h_k||_2 < eps`` or ``max_iter`` steps."""
    data = np.asarray(data, dtype=float)
    fmap = fmap or (lambda x: forward_map(problem, x))
    areas = problem.mesh.cell_areas
    a = problem.param.default_start() if config.a0 is None else np.asarray(config.a0, dtype=float).copy()
    out = InversionRun()
    t0 = time.perf_counter()

    def record(a_k, pred):
        out.iterates.append(a_k.copy())
        out.residual_norms.append(float(np.linalg.norm(data - pred)))
        if truth is not None:
            out.errors.append(relative_error(realize(problem.param, a_k), truth, areas))
        out.seconds.append(time.perf_counter() - t0)

    try:
        pred = fmap(a)
        record(a, pred)
        for k in range(config.max_iter):
            F = data - pred
            G0 = fd_jacobian(a, problem, config.tau, base=pred, workers=config.workers, fmap=fmap)
            h = lm_step(G0, F, config.penalty, a, config.step_form)
            a = _project(problem, a + h)
            pred = fmap(a)
            out.step_norms.append(float(np.linalg.norm(h)))
            record(a, pred)
            log.debug("k=%d |F|=%.6e |h|=%.3e", k + 1, out.residual_norms[-1], out.step_norms[-1])
            if out.step_norms[-1] < config.eps:
                out.termination = STEP_SMALL
                break
        else:
            out.termination = MAX_ITERATIONS
    except (ForwardSolveError, np.linalg.LinAlgError) as exc:
        out.termination = SOLVER_FAILURE
        out.wall_time = time.perf_counter() - t0
        raise InversionAborted(str(exc), out) from exc
    out.wall_time = time.perf_counter() - t0
    return out
