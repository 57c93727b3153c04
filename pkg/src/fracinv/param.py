"""Low-dimensional parameterisations of the cellwise reaction field."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .mesh import Mesh

# admissible range [1/k2, k1]
DEFAULT_BOUNDS = (1e-3, 100.0)


class Kind(str, Enum):
    KLE = "kle"
    SUBREGION = "subregion"
    STRIP = "strip"


@dataclass(frozen=True, eq=False)
class KleBasis:
    rho2: float
    l1: float
    l2: float
    energy_fraction: float
    eigenvalues: np.ndarray = field(repr=False)  # all of them, descending
    modes: np.ndarray = field(repr=False)  # (J, n_q), columns sqrt(lam_i) phi_i
    eigenvectors: np.ndarray = field(repr=False)  # (J, n_q), phi_i at cell centres

    @property
    def n_q(self) -> int:
        return self.modes.shape[1]

    @property
    def captured_energy(self) -> float:
        return float(self.eigenvalues[: self.n_q].sum() / self.eigenvalues.sum())


def gaussian_covariance(points, rho2: float, l1: float, l2: float) -> np.ndarray:
    d = points[:, None, :] - points[None, :, :]
    return rho2 * np.exp(-(d[..., 0] ** 2) / (2 * l1**2) - d[..., 1] ** 2 / (2 * l2**2))


def build_kle(
    mesh: Mesh,
    rho2: float = 0.01,
    l1: float = 0.3,
    l2: float = 0.3,
    energy_fraction: float = 0.95,
    n_modes: int | None = None,
) -> KleBasis:
    """Nyström KLE of the Gaussian covariance at the cell centres.

    The retained count is the smallest one whose eigenvalues carry at least
    ``energy_fraction`` of the trace, unless ``n_modes`` fixes it.
    """
    if min(rho2, l1, l2) <= 0:
        raise ValueError("rho2, l1 and l2 must be positive")
    if not 0.0 < energy_fraction <= 1.0:
        raise ValueError("energy_fraction must lie in (0, 1]")
    w = mesh.cell_areas
    sw = np.sqrt(w)
    cov = gaussian_covariance(mesh.cell_centers, rho2, l1, l2)
    sym = sw[:, None] * cov * sw[None, :]
    try:
        lam, vec = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"covariance eigen-decomposition failed: {exc}") from exc
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    vec = vec[:, order]
    if lam[-1] < -1e-12:
        raise ValueError(f"covariance is not positive semidefinite (min eigenvalue {lam[-1]:.3e})")
    lam = np.clip(lam, 0.0, None)

    if n_modes is None:
        frac = np.cumsum(lam) / lam.sum()
        # guard against the cumulative sum landing a hair under 1.0
        n_q = int(min(np.searchsorted(frac, energy_fraction - 1e-14) + 1, len(lam)))
    else:
        if not 1 <= n_modes <= len(lam):
            raise ValueError(f"n_modes must lie in 1..{len(lam)}")
        n_q = int(n_modes)
    phi = vec[:, :n_q] / sw[:, None]
    # fix the arbitrary eigenvector sign: largest-magnitude entry positive
    flip = np.sign(phi[np.argmax(np.abs(phi), axis=0), np.arange(n_q)])
    phi = phi * flip
    modes = phi * np.sqrt(lam[:n_q])
    for arr in (lam, modes, phi):
        arr.setflags(write=False)
    return KleBasis(rho2, l1, l2, energy_fraction, lam, modes, phi)


@dataclass(frozen=True, eq=False)
class CoefficientParam:
    """Map from a parameter vector ``a`` to a cellwise field.

    ``region_of`` assigns every cell to one region for the indicator kinds.
    ``graph`` lists undirected neighbour pairs ``(i, j), i < j`` of regions.
    """

    kind: Kind
    dim: int
    mesh: Mesh = field(repr=False)
    kle: KleBasis | None = field(default=None, repr=False)
    region_of: np.ndarray | None = field(default=None, repr=False)
    graph: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int), repr=False)
    bounds: tuple[float, float] = DEFAULT_BOUNDS

    def clamp(self, q) -> np.ndarray:
        return np.clip(q, *self.bounds)

    def default_start(self) -> np.ndarray:
        if self.kind is Kind.KLE:
            return np.zeros(self.dim)
        return np.ones(self.dim)

    def region_areas(self) -> np.ndarray:
        """Area of every region (indicator kinds only)."""
        if self.region_of is None:
            raise ValueError("KLE parameters have no regions")
        return np.bincount(self.region_of, weights=self.mesh.cell_areas, minlength=self.dim)

    def interface_lengths(self) -> np.ndarray:
        """Length of the shared boundary of each ``graph`` pair."""
        if self.region_of is None:
            raise ValueError("KLE parameters have no regions")
        cells = self.mesh.edge_cells
        inner = np.all(cells >= 0, axis=1)
        r = self.region_of[cells[inner]]
        crossing = r[:, 0] != r[:, 1]
        pairs = np.sort(r[crossing], axis=1)
        lengths = self.mesh.edge_lengths[inner][crossing]
        lookup = {tuple(p): k for k, p in enumerate(self.graph)}
        out = np.zeros(len(self.graph))
        for p, ell in zip(map(tuple, pairs), lengths):
            out[lookup[p]] += ell
        return out


def kle_param(mesh: Mesh, basis: KleBasis, bounds=DEFAULT_BOUNDS) -> CoefficientParam:
    return CoefficientParam(Kind.KLE, basis.n_q, mesh, kle=basis, bounds=tuple(bounds))


def subregion_param(mesh: Mesh, bx: int = 3, by: int = 3, bounds=DEFAULT_BOUNDS) -> CoefficientParam:
    """``bx`` by ``by`` equal blocks.

    Blocks are numbered column by column (``block = ix * by + iy``), which
    puts the two blocks of the lower-left ``2/3 x 1/3`` rectangle at indices
    0 and 3.
    """
    if mesh.nx % bx or mesh.ny % by:
        raise ValueError(f"{bx}x{by} blocks do not align with a {mesh.nx}x{mesh.ny} mesh")
    i = np.arange(mesh.n_cells) % mesh.nx
    j = np.arange(mesh.n_cells) // mesh.nx
    ix = i // (mesh.nx // bx)
    iy = j // (mesh.ny // by)
    region_of = ix * by + iy
    pairs = []
    for a in range(bx):
        for b in range(by):
            k = a * by + b
            if a + 1 < bx:
                pairs.append((k, k + by))
            if b + 1 < by:
                pairs.append((k, k + 1))
    graph = np.array(sorted(pairs), dtype=int).reshape(-1, 2)
    region_of.setflags(write=False)
    return CoefficientParam(Kind.SUBREGION, bx * by, mesh, region_of=region_of, graph=graph, bounds=tuple(bounds))


def strip_param(mesh: Mesh, n_strips: int = 20, bounds=DEFAULT_BOUNDS) -> CoefficientParam:
    """Full-height vertical strips of equal width, left to right."""
    if mesh.nx % n_strips:
        raise ValueError(f"{n_strips} strips do not align with {mesh.nx} cell columns")
    i = np.arange(mesh.n_cells) % mesh.nx
    region_of = i // (mesh.nx // n_strips)
    graph = np.column_stack([np.arange(n_strips - 1), np.arange(1, n_strips)])
    region_of.setflags(write=False)
    return CoefficientParam(Kind.STRIP, n_strips, mesh, region_of=region_of, graph=graph, bounds=tuple(bounds))


def realize(param: CoefficientParam, a) -> np.ndarray:
    a = np.asarray(a, dtype=float).ravel()
    if a.shape != (param.dim,):
        raise ValueError(f"expected {param.dim} parameters, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("parameter vector contains non-finite values")
    if param.kind is Kind.KLE:
        with np.errstate(over="ignore"):
            q = np.exp(param.kle.modes @ a)
    else:
        q = a[param.region_of]
    return param.clamp(q)


def region_average(param: CoefficientParam, q) -> np.ndarray:
    """Cell-area-weighted mean of ``q`` over each region (indicator kinds)."""
    if param.region_of is None:
        raise ValueError("region averages need an indicator parameterisation")
    q = np.asarray(q, dtype=float)
    sums = np.bincount(param.region_of, weights=q, minlength=param.dim)
    counts = np.bincount(param.region_of, minlength=param.dim)
    return sums / counts


def kle_coordinates(param: CoefficientParam, q) -> np.ndarray:
    """Weighted least-squares KLE coordinates of ``log q``."""
    w = np.sqrt(param.mesh.cell_areas)[:, None]
    coef, *_ = np.linalg.lstsq(w * param.kle.modes, w[:, 0] * np.log(q), rcond=None)
    return coef


TRUTH_CASES = ("smooth", "jump", "pwsmooth")


def truth_function(case: str):
    """Closed-form true coefficient ``q(x, y)`` for a named case."""
    if case == "smooth":
        return lambda x, y: np.cos(np.pi * x) * np.sin(np.pi * y) + 1.5
    if case == "jump":
        return lambda x, y: np.where((x <= 2.0 / 3.0) & (y <= 1.0 / 3.0), 10.0, 1.0)
    if case in ("pwsmooth", "piecewise-smooth"):
        def q(x, y):
            x = np.asarray(x, dtype=float)
            return np.select(
                [x < 0.25, x < 0.5, x < 0.75],
                [np.ones_like(x), 12.0 * x - 2.0, np.full_like(x, 4.0)],
                -12.0 * x + 13.0,
            ) + 0.0 * np.asarray(y)
        return q
    raise ValueError(f"unknown truth case {case!r}; expected one of {TRUTH_CASES}")


def project_truth(mesh: Mesh, case: str) -> np.ndarray:
    """Truth field sampled at cell centres."""
    f = truth_function(case)
    c = mesh.cell_centers
    return np.asarray(f(c[:, 0], c[:, 1]), dtype=float)
