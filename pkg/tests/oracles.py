"""Independent reference computations shared by the tests."""

import math

import numpy as np

from fracinv.forward import assemble_boundary_load, assemble_reaction, assemble_static
from fracinv.caputo import build_scheme


def rt0_basis(mesh, e, c, X, Y):
    """Velocity components and divergence of edge basis ``e`` on cell ``c``.

    Normal component one on the edge along its fixed normal, zero on the
    opposite side of the cell.
    """
    cx, cy = mesh.cell_centers[c]
    x0, x1 = cx - mesh.dx / 2, cx + mesh.dx / 2
    y0, y1 = cy - mesh.dy / 2, cy + mesh.dy / 2
    ex0, ey0, ex1, ey1 = mesh.edge_points[e]
    zero = np.zeros_like(X)
    if ex0 == ex1:  # vertical edge
        if math.isclose(ex0, x0):
            return (x1 - X) / mesh.dx, zero, zero - 1 / mesh.dx
        return (X - x0) / mesh.dx, zero, zero + 1 / mesh.dx
    if math.isclose(ey0, y0):
        return zero, (y1 - Y) / mesh.dy, zero - 1 / mesh.dy
    return zero, (Y - y0) / mesh.dy, zero + 1 / mesh.dy


def dense_space_time_solve(mesh, q, exc, alpha, dt, M):
    """Solve all M steps at once as one dense linear system.

    The time coupling is written straight from the L1 sum
    ``sum_k b_{n+1-k} (beta^k - beta^{k-1})`` rather than through the
    recombined history weights used by the stepper.
    """
    fm = assemble_static(mesh)
    A, B, C = fm.A.toarray(), fm.B.toarray(), fm.C.toarray()
    D = assemble_reaction(mesh, q).toarray()
    s = dt**alpha * math.gamma(2 - alpha)
    G = assemble_boundary_load(mesh, exc, build_scheme(alpha, dt, M))
    I, J = mesh.n_edges, mesh.n_cells
    size = I + J
    K = np.zeros((M * size, M * size))
    rhs = np.zeros(M * size)

    def b(m):
        return m ** (1 - alpha) - (m - 1) ** (1 - alpha)

    for n in range(1, M + 1):
        r = (n - 1) * size
        sig = slice(r, r + I)
        bet = slice(r + I, r + size)
        K[sig, sig] = A
        K[sig, bet] = B
        rhs[sig] = G[:, n - 1]
        K[bet, sig] = s * B.T
        K[bet, bet] += s * D
        for k in range(1, n + 1):
            w = b(n + 1 - k)
            ck = slice((k - 1) * size + I, k * size)
            K[bet, ck] += w * C  # + w C beta^k
            if k > 1:
                cprev = slice((k - 2) * size + I, (k - 1) * size)
                K[bet, cprev] -= w * C  # - w C beta^{k-1}; beta^0 = 0
    x = np.linalg.solve(K, rhs).reshape(M, size)
    return x[:, :I], x[:, I:]
