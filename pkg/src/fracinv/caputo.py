"""L1 discretisation of the Caputo derivative of order ``0 < alpha < 1``.

With ``u^n = u(t_n)`` the derivative at ``t_n`` is approximated by

    (1/s) * sum_{k=1..n} b_{n+1-k} (u^k - u^{k-1}),

    s   = dt**alpha * Gamma(2 - alpha)
    b_n = n**(1-alpha) - (n-1)**(1-alpha)
    c_k = b_k - b_{k+1}

so that ``s * D u^n = u^n - sum_{k=1..n-1} c_k u^{n-k} - b_n u^0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class CaputoScheme:
    alpha: float
    dt: float
    M: int
    s: float
    b: np.ndarray = field(repr=False)  # b[n-1] = b_n, n = 1..M
    c: np.ndarray = field(repr=False)  # c[k-1] = c_k, k = 1..M-1

    @property
    def times(self) -> np.ndarray:
        """t_1 .. t_M."""
        return self.dt * np.arange(1, self.M + 1)

    def b_n(self, n: int) -> float:
        return float(self.b[n - 1])

    def c_k(self, k: int) -> float:
        return float(self.c[k - 1])


def build_scheme(alpha: float, dt: float, M: int) -> CaputoScheme:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if int(M) != M or M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    M = int(M)
    p = 1.0 - alpha
    # n**p - (n-1)**p and the second difference lose ~n**p * eps when formed
    # directly; expm1/log1p keep both at full relative precision.
    n = np.arange(1, M + 1, dtype=float)
    b = -(n**p) * np.expm1(p * np.log1p(-1.0 / np.maximum(n, 2.0)))
    b[0] = 1.0
    k = np.arange(1, M, dtype=float)
    up = np.expm1(p * np.log1p(1.0 / k))
    down = np.expm1(p * np.log1p(-1.0 / np.maximum(k, 2.0)))
    down = np.where(k == 1.0, -1.0, down)
    c = -(k**p) * (up + down)
    b.setflags(write=False)
    c.setflags(write=False)
    s = dt**alpha * math.gamma(2.0 - alpha)
    return CaputoScheme(alpha=float(alpha), dt=float(dt), M=M, s=s, b=b, c=c)


def history_combination(scheme: CaputoScheme, n: int, past_states) -> np.ndarray:
    """Return ``c_1 beta^{n-1} + ... + c_{n-1} beta^1 + b_n beta^0``.

    Parameters
    ----------
    scheme : CaputoScheme
    n : int
        Current step, ``1 <= n <= M``.
    past_states : sequence or (n, J) array
        ``beta^0 .. beta^{n-1}``.
    """
    if n < 1 or n > scheme.M:
        raise ValueError(f"step {n} outside 1..{scheme.M}")
    if isinstance(past_states, np.ndarray):
        past = past_states
    else:
        shapes = {np.shape(p) for p in past_states}
        if len(shapes) > 1:
            raise ValueError(f"past states have mismatched shapes {sorted(shapes)}")
        past = np.asarray(past_states, dtype=float)
    if past.ndim != 2 or past.shape[0] != n:
        raise ValueError(f"expected {n} past states, got array of shape {past.shape}")
    out = scheme.b[n - 1] * past[0]
    if n > 1:
        # rows n-1 .. 1 paired with c_1 .. c_{n-1}
        out = out + scheme.c[: n - 1] @ past[n - 1 : 0 : -1]
    return out
