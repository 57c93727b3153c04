"""Uniform rectangular mesh of the unit square with P0 cell and RT0 edge dofs.

Numbering
---------
Cells are row-major from the lower-left corner: ``cell = j * nx + i``.
Edges come in two groups.  Vertical edges (normal ``(+1, 0)``) first, with
``edge = j * (nx + 1) + i`` for the edge at ``x = i * dx`` spanning row ``j``.
Horizontal edges (normal ``(0, +1)``) follow, with
``edge = nv + j * nx + i`` for the edge at ``y = j * dy`` spanning column ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIDES = ("left", "right", "bottom", "top")
WHOLE_BOUNDARY = ("boundary", "all", "whole")


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable structured mesh.

    Attributes
    ----------
    cell_centers : (J, 2) array
    cell_edges : (J, 4) int array
        Edge indices of each cell in the order left, right, bottom, top.
    edge_points : (I, 4) array
        ``x0, y0, x1, y1`` of each edge.
    edge_normals : (I, 2) array
        Fixed global unit normal of each edge.
    edge_lengths : (I,) array
    edge_cells : (I, 2) int array
        Cell on the negative side and on the positive side of the fixed
        normal; ``-1`` where the edge lies on the boundary.
    boundary_edges : (nb,) int array, sorted
    boundary_signs : (nb,) array
        ``+1`` where the fixed normal points out of the domain, else ``-1``.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    cell_centers: np.ndarray = field(repr=False)
    cell_edges: np.ndarray = field(repr=False)
    edge_points: np.ndarray = field(repr=False)
    edge_normals: np.ndarray = field(repr=False)
    edge_lengths: np.ndarray = field(repr=False)
    edge_cells: np.ndarray = field(repr=False)
    boundary_edges: np.ndarray = field(repr=False)
    boundary_signs: np.ndarray = field(repr=False)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_vertical(self) -> int:
        return (self.nx + 1) * self.ny

    @property
    def n_edges(self) -> int:
        return self.n_vertical + self.nx * (self.ny + 1)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def cell_areas(self) -> np.ndarray:
        return np.full(self.n_cells, self.cell_area)

    def outward_sign(self, edges) -> np.ndarray:
        """Outward-normal sign for boundary edge indices."""
        edges = np.asarray(edges, dtype=int)
        pos = np.searchsorted(self.boundary_edges, edges)
        pos = np.clip(pos, 0, len(self.boundary_edges) - 1)
        if np.any(self.boundary_edges[pos] != edges):
            raise ValueError("not all edges lie on the boundary")
        return self.boundary_signs[pos]


def build_mesh(nx: int, ny: int) -> Mesh:
    """Build the ``nx`` by ``ny`` uniform mesh of (0, 1)^2."""
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be positive integers, got ({nx}, {ny})")
    nx, ny = int(nx), int(ny)
    dx, dy = 1.0 / nx, 1.0 / ny
    nv = (nx + 1) * ny
    nh = nx * (ny + 1)
    n_edges = nv + nh

    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    centers = np.column_stack([(ii + 0.5) * dx, (jj + 0.5) * dy])

    def vert(i, j):
        return j * (nx + 1) + i

    def horiz(i, j):
        return nv + j * nx + i

    cell_edges = np.column_stack(
        [vert(ii, jj), vert(ii + 1, jj), horiz(ii, jj), horiz(ii, jj + 1)]
    )

    points = np.empty((n_edges, 4))
    normals = np.zeros((n_edges, 2))
    lengths = np.empty(n_edges)
    edge_cells = np.full((n_edges, 2), -1, dtype=int)
    signs = np.zeros(n_edges)

    # vertical
    vj, vi = np.meshgrid(np.arange(ny), np.arange(nx + 1), indexing="ij")
    vi, vj = vi.ravel(), vj.ravel()
    idx = vert(vi, vj)
    points[idx] = np.column_stack([vi * dx, vj * dy, vi * dx, (vj + 1) * dy])
    normals[idx, 0] = 1.0
    lengths[idx] = dy
    edge_cells[idx, 0] = np.where(vi > 0, vj * nx + vi - 1, -1)
    edge_cells[idx, 1] = np.where(vi < nx, vj * nx + vi, -1)
    signs[idx] = np.where(vi == 0, -1.0, np.where(vi == nx, 1.0, 0.0))

    # horizontal
    hj, hi = np.meshgrid(np.arange(ny + 1), np.arange(nx), indexing="ij")
    hi, hj = hi.ravel(), hj.ravel()
    idx = horiz(hi, hj)
    points[idx] = np.column_stack([hi * dx, hj * dy, (hi + 1) * dx, hj * dy])
    normals[idx, 1] = 1.0
    lengths[idx] = dx
    edge_cells[idx, 0] = np.where(hj > 0, (hj - 1) * nx + hi, -1)
    edge_cells[idx, 1] = np.where(hj < ny, hj * nx + hi, -1)
    signs[idx] = np.where(hj == 0, -1.0, np.where(hj == ny, 1.0, 0.0))

    boundary = np.flatnonzero(signs != 0)
    return Mesh(
        nx=nx,
        ny=ny,
        dx=dx,
        dy=dy,
        cell_centers=_frozen(centers),
        cell_edges=_frozen(cell_edges),
        edge_points=_frozen(points),
        edge_normals=_frozen(normals),
        edge_lengths=_frozen(lengths),
        edge_cells=_frozen(edge_cells),
        boundary_edges=_frozen(boundary),
        boundary_signs=_frozen(signs[boundary]),
    )


def boundary_restriction(mesh: Mesh, region) -> tuple[np.ndarray, np.ndarray]:
    """Boundary edges inside ``region`` and their outward-normal signs.

    ``region`` is ``"boundary"`` (the whole of the boundary), one of the side
    names ``left``/``right``/``bottom``/``top``, a sequence of side names, or
    an explicit collection of boundary edge indices.

    Returns
    -------
    edges : sorted int array
    signs : float array of +1/-1
    """
    if region is None:
        raise ValueError("empty region descriptor")
    if isinstance(region, str):
        region = region.strip().lower()
        if region in WHOLE_BOUNDARY:
            return mesh.boundary_edges.copy(), mesh.boundary_signs.copy()
        region = [s for s in region.split(",") if s]
    region = list(region)
    if not region:
        raise ValueError("empty region descriptor")

    if all(isinstance(r, str) for r in region):
        pts = mesh.edge_points[mesh.boundary_edges]
        mask = np.zeros(len(mesh.boundary_edges), dtype=bool)
        for side in region:
            side = side.strip().lower()
            if side == "left":
                mask |= (pts[:, 0] == 0.0) & (pts[:, 2] == 0.0)
            elif side == "right":
                mask |= np.isclose(pts[:, 0], 1.0) & np.isclose(pts[:, 2], 1.0)
            elif side == "bottom":
                mask |= (pts[:, 1] == 0.0) & (pts[:, 3] == 0.0)
            elif side == "top":
                mask |= np.isclose(pts[:, 1], 1.0) & np.isclose(pts[:, 3], 1.0)
            else:
                raise ValueError(f"unknown boundary side {side!r}")
        return mesh.boundary_edges[mask].copy(), mesh.boundary_signs[mask].copy()

    edges = np.unique(np.asarray(region, dtype=int))
    return edges, mesh.outward_sign(edges)
