"""Synthetic flux data: experiment catalog, forward evaluation, noise."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .caputo import CaputoScheme, build_scheme
from .forward import Excitation, dirichlet_to_neumann, sine_excitation
from .mesh import Mesh, boundary_restriction, build_mesh
from .param import (
    CoefficientParam,
    build_kle,
    kle_param,
    project_truth,
    strip_param,
    subregion_param,
)
from .regpen import Penalty

# (k1, k2) pairs for g = sin(k1 pi x) cos(k2 pi y), used in this order
EXCITATION_SET = ((1, 1), (1, 2), (2, 1), (2, 2), (1, 3))
MEASUREMENT_STEPS = (61, 71, 81, 91, 101)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    truth: str
    kind: str  # "kle", "subregion" or "strip"
    nx: int = 20
    ny: int = 20
    alpha: float = 0.4
    dt: float = 0.01
    times: tuple = MEASUREMENT_STEPS
    n_experiments: int = 1
    excitation_set: tuple = EXCITATION_SET
    delta: float = 0.01
    seed: int = 0
    region: str = "boundary"
    beta: float = 0.0
    gamma: float = 0.0
    blocks: tuple = (3, 3)
    n_strips: int = 20
    kle_rho2: float = 0.01
    kle_length: tuple = (0.3, 0.3)
    kle_modes: int | None = 8
    kle_energy: float = 0.95
    noise_mode: str = "relative"
    refine_data: bool = False
    penalty_weighting: str = "field"

    def __post_init__(self):
        times = tuple(int(t) for t in self.times)
        object.__setattr__(self, "times", times)
        if not times or any(b <= a for a, b in zip(times, times[1:])) or times[0] < 1:
            raise ValueError("measurement indices must be positive and strictly increasing")
        if self.n_experiments < 1:
            raise ValueError("need at least one excitation")
        if self.n_experiments > len(self.excitation_set):
            raise ValueError(f"only {len(self.excitation_set)} excitations available")
        if self.delta < 0:
            raise ValueError("noise level must be non-negative")
        if self.noise_mode not in ("relative", "absolute"):
            raise ValueError(f"unknown noise mode {self.noise_mode!r}")
        if self.penalty_weighting not in ("field", "vector"):
            raise ValueError(f"unknown penalty weighting {self.penalty_weighting!r}")
        if self.kind not in ("kle", "subregion", "strip"):
            raise ValueError(f"unknown parameterisation {self.kind!r}")

    @property
    def M(self) -> int:
        return self.times[-1]

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Problem:
    """Everything an inversion needs, built once from a spec."""

    spec: ExperimentSpec
    mesh: Mesh
    scheme: CaputoScheme
    param: CoefficientParam
    excitations: tuple
    q_true: np.ndarray = field(repr=False)

    @property
    def times(self) -> tuple:
        return self.spec.times

    @property
    def region(self):
        return self.spec.region

    def penalty(self, beta: float | None = None, gamma: float | None = None, smooth_eps: float = 1e-4) -> Penalty:
        """Penalty on this problem's parameters.

        With ``penalty_weighting="field"`` the indicator kinds are weighted by
        region area and interface length, so the penalty measures the
        piecewise-constant field ``q`` rather than the vector ``a``.  KLE
        coordinates are standard normal by construction and stay unweighted.
        ``"vector"`` leaves all weights at 1.
        """
        weighted = self.spec.penalty_weighting == "field" and self.param.region_of is not None
        return Penalty(
            beta=self.spec.beta if beta is None else beta,
            gamma=self.spec.gamma if gamma is None else gamma,
            smooth_eps=smooth_eps,
            graph=self.param.graph,
            node_weights=self.param.region_areas() if weighted else None,
            edge_weights=self.param.interface_lengths() if weighted else None,
        )

    def data_length(self) -> int:
        edges, _ = boundary_restriction(self.mesh, self.region)
        return len(self.excitations) * len(self.times) * len(edges)


def make_excitations(spec: ExperimentSpec) -> tuple[Excitation, ...]:
    return tuple(sine_excitation(k1, k2) for k1, k2 in spec.excitation_set[: spec.n_experiments])


def make_param(spec: ExperimentSpec, mesh: Mesh) -> CoefficientParam:
    if spec.kind == "kle":
        l1, l2 = spec.kle_length
        basis = build_kle(mesh, spec.kle_rho2, l1, l2, spec.kle_energy, n_modes=spec.kle_modes)
        return kle_param(mesh, basis)
    if spec.kind == "subregion":
        return subregion_param(mesh, *spec.blocks)
    return strip_param(mesh, spec.n_strips)


def build_problem(spec: ExperimentSpec) -> Problem:
    mesh = build_mesh(spec.nx, spec.ny)
    return Problem(
        spec=spec,
        mesh=mesh,
        scheme=build_scheme(spec.alpha, spec.dt, spec.M),
        param=make_param(spec, mesh),
        excitations=make_excitations(spec),
        q_true=project_truth(mesh, spec.truth),
    )


def _refined_clean(problem: Problem) -> np.ndarray:
    """Flux data computed on the once-refined grid, averaged back to coarse edges."""
    spec, coarse = problem.spec, problem.mesh
    fine = build_mesh(2 * spec.nx, 2 * spec.ny)
    q_fine = project_truth(fine, spec.truth)
    fine_flux = dirichlet_to_neumann(fine, q_fine, problem.excitations, problem.scheme, "boundary", spec.times)
    fine_edges = fine.boundary_edges
    mids = 0.5 * (fine.edge_points[fine_edges, :2] + fine.edge_points[fine_edges, 2:])
    lookup = {tuple(np.round(m, 12)): k for k, m in enumerate(mids)}
    edges, _ = boundary_restriction(coarse, problem.region)
    pts = coarse.edge_points[edges]
    children = []
    for frac in (0.25, 0.75):
        m = pts[:, :2] + frac * (pts[:, 2:] - pts[:, :2])
        children.append([lookup[tuple(np.round(p, 12))] for p in m])
    children = np.array(children)
    nb = len(fine_edges)
    blocks = fine_flux.reshape(-1, nb)  # (experiments * times, fine boundary edges)
    return (0.5 * (blocks[:, children[0]] + blocks[:, children[1]])).ravel()


def clean_data(problem: Problem) -> np.ndarray:
    if problem.spec.refine_data:
        return _refined_clean(problem)
    return dirichlet_to_neumann(
        problem.mesh, problem.q_true, problem.excitations, problem.scheme, problem.region, problem.times
    )


def add_noise(clean: np.ndarray, delta: float, seed: int, mode: str = "relative") -> np.ndarray:
    """``clean + eta`` with i.i.d. ``eta ~ N(0, std^2)``.

    In relative mode ``std = delta * RMS(clean)``; in absolute mode ``std = delta``.
    """
    if delta < 0:
        raise ValueError("noise level must be non-negative")
    if delta == 0:
        return clean.copy()
    std = delta * float(np.sqrt(np.mean(clean**2))) if mode == "relative" else float(delta)
    rng = np.random.default_rng(seed)
    return clean + std * rng.standard_normal(clean.shape)


def make_data(spec: ExperimentSpec, problem: Problem | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(clean, noisy)`` flux data for ``spec``."""
    problem = problem or build_problem(spec)
    clean = clean_data(problem)
    return clean, add_noise(clean, spec.delta, spec.seed, spec.noise_mode)


def reference_specs() -> dict[str, ExperimentSpec]:
    return {
        "smooth": ExperimentSpec(
            name="smooth", truth="smooth", kind="kle", nx=20, ny=20,
            beta=5e-4, gamma=0.0, kle_modes=8,
        ),
        "jump": ExperimentSpec(
            name="jump", truth="jump", kind="subregion", nx=18, ny=18,
            beta=0.0, gamma=5e-3, blocks=(3, 3),
        ),
        "pwsmooth": ExperimentSpec(
            name="pwsmooth", truth="pwsmooth", kind="strip", nx=20, ny=20,
            beta=5.005e-3, gamma=1.005e-6, n_strips=20, times=tuple(range(21, 100, 2)),
        ),
    }


def get_spec(name: str) -> ExperimentSpec:
    specs = reference_specs()
    if name not in specs:
        raise KeyError(f"unknown experiment {name!r}; choose from {sorted(specs)}")
    return specs[name]
