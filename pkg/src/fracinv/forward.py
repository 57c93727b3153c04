"""Mixed RT0/P0 discretisation of the fractional reaction-diffusion problem.

Unknowns per step are the edge normal components ``sigma`` of the flux
``omega = -grad u`` and the cell values ``beta`` of ``u``.  Each step solves

    [ A      B     ] [sigma^n]   [ G(:, n)          ]
    [ s B^T  C + sD] [beta^n ] = [ C * hist_n(beta) ]

with ``A = -(RT0 mass)``, ``B_ec = int div(psi_e) phi_c``, ``C`` the P0 mass,
``D`` the reaction mass and ``G_en = int_{boundary} u(x, t_n) psi_e . nu``.
The block matrix depends on ``q`` but not on ``n`` and is factorised once.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .caputo import CaputoScheme, history_combination
from .mesh import Mesh, boundary_restriction, build_mesh

# 3 points leave ~3e-6 on a half-unit edge for sin(pi x); 5 points ~1e-11
BOUNDARY_GAUSS_POINTS = 5


class ForwardSolveError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class FemMatrices:
    A: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    D: sp.csr_matrix | None = None


def _square(t):
    return np.asarray(t, dtype=float) ** 2


@dataclass(frozen=True)
class Excitation:
    """Boundary Dirichlet data ``u = lam(t) * g(x, y)``."""

    g: Callable = field(compare=False)
    lam: Callable = field(default=_square, compare=False)
    label: str = "g"

    def __post_init__(self):
        lam0 = float(np.asarray(self.lam(0.0)))
        if lam0 != 0.0:
            raise ValueError(f"lam(0) must vanish for zero initial data, got {lam0}")

    def scaled(self, factor: float) -> "Excitation":
        g = self.g
        return Excitation(lambda x, y: factor * g(x, y), self.lam, f"{factor}*{self.label}")


def sine_excitation(k1: int, k2: int, lam: Callable = _square) -> Excitation:
    """``g(x, y) = sin(k1 pi x) cos(k2 pi y)``."""

    def g(x, y):
        return np.sin(k1 * np.pi * x) * np.cos(k2 * np.pi * y)

    return Excitation(g, lam, f"sin({k1}pi x)cos({k2}pi y)")


def zero_excitation() -> Excitation:
    return Excitation(lambda x, y: np.zeros(np.broadcast(x, y).shape), _square, "zero")


def assemble_static(mesh: Mesh) -> FemMatrices:
    """Edge mass ``A`` (negated), divergence coupling ``B`` and cell mass ``C``."""
    n_edges, n_cells = mesh.n_edges, mesh.n_cells
    area = mesh.cell_area
    ce = mesh.cell_edges
    rows, cols, vals = [], [], []
    # RT0 on a rectangle: the x-pair (left, right) and y-pair (bottom, top)
    # decouple; each pair has local mass area * [[1/3, 1/6], [1/6, 1/3]].
    for first, second in ((0, 1), (2, 3)):
        e0, e1 = ce[:, first], ce[:, second]
        rows += [e0, e1, e0, e1]
        cols += [e0, e1, e1, e0]
        vals += [np.full(n_cells, area / 3.0)] * 2 + [np.full(n_cells, area / 6.0)] * 2
    mass = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_edges, n_edges),
    ).tocsr()
    A = -mass

    # div(psi_e) is +-1/h on each neighbour, integrating to +-|e|: plus on the
    # cell the fixed normal leaves, minus on the cell it enters.
    lengths = mesh.edge_lengths
    ec = mesh.edge_cells
    b_rows, b_cols, b_vals = [], [], []
    for side, sign in ((0, 1.0), (1, -1.0)):
        has = ec[:, side] >= 0
        e = np.flatnonzero(has)
        b_rows.append(e)
        b_cols.append(ec[has, side])
        b_vals.append(sign * lengths[has])
    B = sp.coo_matrix(
        (np.concatenate(b_vals), (np.concatenate(b_rows), np.concatenate(b_cols))),
        shape=(n_edges, n_cells),
    ).tocsr()
    C = sp.diags(mesh.cell_areas).tocsr()
    return FemMatrices(A=A, B=B, C=C)


@functools.lru_cache(maxsize=16)
def _static_for(nx: int, ny: int) -> tuple[Mesh, FemMatrices]:
    mesh = build_mesh(nx, ny)
    return mesh, assemble_static(mesh)


def static_matrices(mesh: Mesh) -> FemMatrices:
    """Cached ``assemble_static`` keyed on the grid size."""
    return _static_for(mesh.nx, mesh.ny)[1]


def check_field(mesh: Mesh, q) -> np.ndarray:
    q = np.asarray(q, dtype=float).ravel()
    if q.shape != (mesh.n_cells,):
        raise ValueError(f"q must have {mesh.n_cells} cell values, got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("q contains non-finite values")
    if np.any(q <= 0.0):
        raise ValueError("q must be strictly positive")
    return q


def assemble_reaction(mesh: Mesh, q) -> sp.csr_matrix:
    q = check_field(mesh, q)
    return sp.diags(q * mesh.cell_areas).tocsr()


def boundary_integrals(mesh: Mesh, g: Callable, n_points: int = BOUNDARY_GAUSS_POINTS) -> np.ndarray:
    """``int_{boundary} g (psi_e . nu)`` for every edge (zero off the boundary).

    Gauss-Legendre with ``n_points`` nodes per boundary edge.
    """
    nodes, weights = np.polynomial.legendre.leggauss(n_points)
    be = mesh.boundary_edges
    pts = mesh.edge_points[be]
    mid = 0.5 * (pts[:, :2] + pts[:, 2:])
    half = 0.5 * (pts[:, 2:] - pts[:, :2])
    total = np.zeros(len(be))
    for xi, w in zip(nodes, weights):
        xy = mid + xi * half
        total += w * np.asarray(g(xy[:, 0], xy[:, 1]), dtype=float)
    out = np.zeros(mesh.n_edges)
    # psi_e . nu is the outward sign; the quadrature weights sum to 2 on [-1, 1]
    out[be] = mesh.boundary_signs * total * 0.5 * mesh.edge_lengths[be]
    return out


def assemble_boundary_load(mesh: Mesh, exc: Excitation, scheme: CaputoScheme) -> np.ndarray:
    """Dense ``G`` of shape ``(I, M)``; column ``n - 1`` belongs to ``t_n``."""
    gvec = boundary_integrals(mesh, exc.g)
    lam = np.asarray(exc.lam(scheme.times), dtype=float)
    return np.outer(gvec, lam)


@dataclass(frozen=True, eq=False)
class ForwardSolution:
    """Time history of one forward solve.

    ``sigma[n - 1]`` and ``beta[n - 1]`` hold the step-``n`` dofs.
    """

    mesh: Mesh
    scheme: CaputoScheme
    sigma: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    load: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)

    def block_residual(self, n: int, matrices: FemMatrices | None = None) -> float:
        """Max-norm residual of the step-``n`` block system."""
        fm = matrices or static_matrices(self.mesh)
        s = self.scheme.s
        D = assemble_reaction(self.mesh, self.q)
        past = np.vstack([np.zeros((1, self.mesh.n_cells)), self.beta[: n - 1]])
        hist = history_combination(self.scheme, n, past)
        sig, bet = self.sigma[n - 1], self.beta[n - 1]
        r1 = fm.A @ sig + fm.B @ bet - self.load[:, n - 1]
        r2 = s * (fm.B.T @ sig) + (fm.C + s * D) @ bet - fm.C @ hist
        return float(max(np.abs(r1).max(), np.abs(r2).max()))


class ForwardOperator:
    """Factorised step matrix for one reaction field ``q``.

    The factorisation is read-only after construction and may be shared by
    solves for any number of excitations.
    """

    def __init__(self, mesh: Mesh, q, scheme: CaputoScheme, matrices: FemMatrices | None = None):
        self.mesh = mesh
        self.scheme = scheme
        self.q = check_field(mesh, q)
        fm = matrices or static_matrices(mesh)
        s = scheme.s
        D = assemble_reaction(mesh, self.q)
        K = sp.bmat([[fm.A, fm.B], [s * fm.B.T, fm.C + s * D]], format="csc")
        try:
            self._lu = splu(K)
        except RuntimeError as exc:
            raise ForwardSolveError(f"singular step matrix: {exc}") from exc
        self._cdiag = fm.C.diagonal()

    def solve_many(self, excitations: Sequence[Excitation]) -> list[ForwardSolution]:
        mesh, scheme = self.mesh, self.scheme
        n_e, n_c, M = mesh.n_edges, mesh.n_cells, scheme.M
        loads = [assemble_boundary_load(mesh, exc, scheme) for exc in excitations]
        n_rhs = len(loads)
        if n_rhs == 0:
            return []
        sigma = np.empty((M, n_e, n_rhs))
        beta = np.zeros((M + 1, n_c, n_rhs))  # beta[0] is the zero initial state
        rhs = np.empty((n_e + n_c, n_rhs))
        flat = beta.reshape(M + 1, n_c * n_rhs)
        b, c = scheme.b, scheme.c
        for n in range(1, M + 1):
            hist = b[n - 1] * flat[0]
            if n > 1:
                hist = hist + c[: n - 1] @ flat[n - 1 : 0 : -1]
            rhs[:n_e] = np.column_stack([G[:, n - 1] for G in loads])
            rhs[n_e:] = self._cdiag[:, None] * hist.reshape(n_c, n_rhs)
            x = self._lu.solve(rhs)
            if not np.all(np.isfinite(x)):
                raise ForwardSolveError(f"non-finite solution at step {n}")
            sigma[n - 1] = x[:n_e]
            beta[n] = x[n_e:]
        return [
            ForwardSolution(
                mesh=mesh,
                scheme=scheme,
                sigma=np.ascontiguousarray(sigma[:, :, k]),
                beta=np.ascontiguousarray(beta[1:, :, k]),
                load=loads[k],
                q=self.q,
            )
            for k in range(n_rhs)
        ]

    def solve(self, exc: Excitation) -> ForwardSolution:
        return self.solve_many([exc])[0]


def solve_forward(mesh: Mesh, q, exc: Excitation, scheme: CaputoScheme) -> ForwardSolution:
    return ForwardOperator(mesh, q, scheme).solve(exc)


def _check_times(times, M: int) -> np.ndarray:
    times = np.asarray(times, dtype=int).ravel()
    if times.size == 0:
        raise ValueError("no measurement times given")
    if times.min() < 1 or times.max() > M:
        raise ValueError(f"step indices must lie in 1..{M}")
    return times


def extract_flux(sol: ForwardSolution, region="boundary", times=None) -> np.ndarray:
    """Outward normal derivative ``du/dnu`` on the region edges, time-major.

    ``omega = -grad u`` and the RT0 dof is omega's component along the fixed
    edge normal, so ``du/dnu = -(outward sign) * sigma``.
    """
    if times is None:
        times = np.arange(1, sol.scheme.M + 1)
    times = _check_times(times, sol.scheme.M)
    edges, signs = boundary_restriction(sol.mesh, region)
    return (-signs[None, :] * sol.sigma[times - 1][:, edges]).ravel()


def dirichlet_to_neumann(
    mesh: Mesh,
    q,
    excitations: Sequence[Excitation],
    scheme: CaputoScheme,
    region="boundary",
    times=None,
    operator: ForwardOperator | None = None,
) -> np.ndarray:
    """Stacked flux data ``[F(q, g_1); ...; F(q, g_N)]``."""
    if len(excitations) == 0:
        raise ValueError("need at least one excitation")
    if times is not None:
        _check_times(times, scheme.M)
    op = operator or ForwardOperator(mesh, q, scheme)
    sols = op.solve_many(list(excitations))
    return np.concatenate([extract_flux(s, region, times) for s in sols])
