"""L2 and BV penalties on the reduced parameter vector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Penalty:
    """``beta * ||a||_2^2 + gamma * (||a||_1 + TV_graph(a))``.

    ``graph`` holds undirected neighbour pairs; an empty graph leaves only the
    L1 part of the BV term.  ``smooth_eps`` rounds off the kinks of |.| in the
    matrices used by the L-M step.

    Optional ``node_weights`` ``m_i`` and ``edge_weights`` ``l_ij`` turn the
    sums into ``sum m_i a_i^2``, ``sum m_i |a_i|`` and ``sum l_ij |a_i - a_j|``.
    With region areas and interface lengths these are the L2, L1 and TV norms
    of the piecewise-constant field the vector describes.  Both default to 1.
    """

    beta: float = 0.0
    gamma: float = 0.0
    smooth_eps: float = 1e-4
    graph: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int), repr=False)
    node_weights: np.ndarray | None = field(default=None, repr=False)
    edge_weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.beta < 0 or self.gamma < 0:
            raise ValueError("penalty weights must be non-negative")
        if self.smooth_eps <= 0:
            raise ValueError("smooth_eps must be positive")
        g = np.sort(np.asarray(self.graph, dtype=int).reshape(-1, 2), axis=1)
        if np.any(g[:, 0] == g[:, 1]):
            raise ValueError("graph contains self loops")
        lengths = np.ones(len(g)) if self.edge_weights is None else np.asarray(self.edge_weights, dtype=float)
        if lengths.shape != (len(g),):
            raise ValueError("need one edge weight per graph pair")
        # store each undirected pair once, as (min, max); duplicate weights add up
        g, inverse = np.unique(g, axis=0, return_inverse=True)
        merged = np.zeros(len(g))
        np.add.at(merged, inverse.ravel(), lengths)
        object.__setattr__(self, "graph", g)
        object.__setattr__(self, "edge_weights", None if self.edge_weights is None else merged)
        if self.node_weights is not None:
            m = np.asarray(self.node_weights, dtype=float).ravel()
            if np.any(m <= 0):
                raise ValueError("node weights must be positive")
            object.__setattr__(self, "node_weights", m)
        if self.edge_weights is not None and np.any(self.edge_weights <= 0):
            raise ValueError("edge weights must be positive")

    def masses(self, n: int) -> np.ndarray:
        if self.node_weights is None:
            return np.ones(n)
        if self.node_weights.size != n:
            raise ValueError(f"penalty has {self.node_weights.size} node weights, a has {n} entries")
        return self.node_weights

    def lengths(self) -> np.ndarray:
        return np.ones(len(self.graph)) if self.edge_weights is None else self.edge_weights


def tv_graph(graph: np.ndarray, a, weights=None) -> float:
    a = np.asarray(a, dtype=float)
    if len(graph) == 0:
        return 0.0
    jumps = np.abs(a[graph[:, 0]] - a[graph[:, 1]])
    return float(jumps.sum() if weights is None else jumps @ weights)


def penalty_value(p: Penalty, a) -> float:
    a = np.asarray(a, dtype=float)
    m = p.masses(a.size)
    value = p.beta * float(m @ (a * a))
    if p.gamma:
        value += p.gamma * (float(m @ np.abs(a)) + tv_graph(p.graph, a, p.lengths()))
    return value


def l2_matrix(p: Penalty, n: int) -> np.ndarray:
    """Matrix of the quadratic ``||a||_2^2`` term (identity when unweighted)."""
    return np.diag(p.masses(n))


def penalty_matrices(p: Penalty, a_current) -> tuple[np.ndarray, np.ndarray]:
    """Lagged-diffusivity matrices for the L1 norm and the graph TV.

    ``L1 = diag(m_i / sqrt(a_i^2 + eps^2))``; ``L2`` is the graph Laplacian
    with edge weights ``l_ij / sqrt((a_i - a_j)^2 + eps^2)``.
    """
    a = np.asarray(a_current, dtype=float)
    n = a.size
    eps2 = p.smooth_eps**2
    L1 = np.diag(p.masses(n) / np.sqrt(a * a + eps2))
    L2 = np.zeros((n, n))
    if len(p.graph):
        i, j = p.graph[:, 0], p.graph[:, 1]
        if j.max() >= n:
            raise ValueError(f"graph refers to parameter {j.max()} but a has {n} entries")
        w = p.lengths() / np.sqrt((a[i] - a[j]) ** 2 + eps2)
        np.add.at(L2, (i, j), -w)
        np.add.at(L2, (j, i), -w)
        np.add.at(L2, (i, i), w)
        np.add.at(L2, (j, j), w)
    return L1, L2
