"""Whitespace-delimited text formats.

Every writer has a matching reader, and floats are written with ``repr`` so
``read(write(x)) == x`` exactly.  Lines starting with ``#`` are headers of
the form ``# key=value``.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .mesh import Mesh


def _f(x) -> str:
    return repr(float(x))


def _header_lines(header: dict | None) -> list[str]:
    return [f"# {k}={v}" for k, v in (header or {}).items()]


def read_header(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") and "=" in line:
                k, v = line[1:].strip().split("=", 1)
                out[k.strip()] = v.strip()
    return out


def _rows(path) -> list[list[str]]:
    with open(path) as fh:
        return [ln.split() for ln in fh if ln.strip() and not ln.startswith("#")]


def _write(path, lines: list[str]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


# mesh -----------------------------------------------------------------------

def write_mesh(path, mesh: Mesh) -> None:
    flag = np.zeros(mesh.n_edges, dtype=int)
    flag[mesh.boundary_edges] = 1
    lines = [f"# nx={mesh.nx}", f"# ny={mesh.ny}",
             "# edge_index x0 y0 x1 y1 normal_x normal_y boundary_flag"]
    for e in range(mesh.n_edges):
        x0, y0, x1, y1 = mesh.edge_points[e]
        nx_, ny_ = mesh.edge_normals[e]
        lines.append(f"{e} {_f(x0)} {_f(y0)} {_f(x1)} {_f(y1)} {_f(nx_)} {_f(ny_)} {flag[e]}")
    _write(path, lines)


def read_mesh(path) -> dict:
    rows = _rows(path)
    arr = np.array([[float(v) for v in r] for r in rows])
    return {
        "edge_index": arr[:, 0].astype(int),
        "points": arr[:, 1:5],
        "normals": arr[:, 5:7],
        "boundary_flag": arr[:, 7].astype(int),
    }


# cell fields ----------------------------------------------------------------

def write_field(path, mesh: Mesh, values, header: dict | None = None, value_name: str = "value") -> None:
    values = np.asarray(values, dtype=float)
    lines = _header_lines(header) + [f"# cell_index x_center y_center {value_name}"]
    for c, ((x, y), v) in enumerate(zip(mesh.cell_centers, values)):
        lines.append(f"{c} {_f(x)} {_f(y)} {_f(v)}")
    _write(path, lines)


def read_field(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(cell_index, centers, values)``."""
    arr = np.array([[float(v) for v in r] for r in _rows(path)]).reshape(-1, 4)
    return arr[:, 0].astype(int), arr[:, 1:3], arr[:, 3]


# measurement data -----------------------------------------------------------

@dataclass
class DataTable:
    experiment: np.ndarray
    time_index: np.ndarray
    edge_index: np.ndarray
    value: np.ndarray


def data_table(data, n_experiments: int, times, edges) -> DataTable:
    """Label a stacked data vector (experiment-major, then time, then edge)."""
    times = np.asarray(times, dtype=int)
    edges = np.asarray(edges, dtype=int)
    data = np.asarray(data, dtype=float)
    if data.size != n_experiments * times.size * edges.size:
        raise ValueError("data length does not match experiments x times x edges")
    ex, ti, ed = np.meshgrid(np.arange(n_experiments), times, edges, indexing="ij")
    return DataTable(ex.ravel(), ti.ravel(), ed.ravel(), data.copy())


def write_data(path, table: DataTable, header: dict | None = None) -> None:
    lines = _header_lines(header) + ["# experiment time_index edge_index value"]
    for e, t, k, v in zip(table.experiment, table.time_index, table.edge_index, table.value):
        lines.append(f"{e} {t} {k} {_f(v)}")
    _write(path, lines)


def read_data(path) -> DataTable:
    rows = _rows(path)
    if not rows:
        raise ValueError(f"{path}: no measurements")
    if any(len(r) != 4 for r in rows):
        raise ValueError(f"{path}: expected 4 columns per measurement line")
    ints = np.array([[int(r[0]), int(r[1]), int(r[2])] for r in rows])
    vals = np.array([float(r[3]) for r in rows])
    return DataTable(ints[:, 0], ints[:, 1], ints[:, 2], vals)


# iteration log --------------------------------------------------------------

@dataclass
class LogRow:
    k: int
    residual_norm: float
    step_norm: float
    relative_error: float
    seconds: float

    def __eq__(self, other):
        if not isinstance(other, LogRow):
            return NotImplemented
        return all(
            (a == b) or (isinstance(a, float) and math.isnan(a) and math.isnan(b))
            for a, b in zip(asdict(self).values(), asdict(other).values())
        )


def log_rows(run, record_time: bool = False) -> list[LogRow]:
    """Row ``k`` describes iterate ``a_k``; its step norm is ``|h_{k-1}|``."""
    nan = float("nan")
    rows = []
    for k in range(len(run.iterates)):
        rows.append(LogRow(
            k=k,
            residual_norm=run.residual_norms[k],
            step_norm=run.step_norms[k - 1] if k > 0 else nan,
            relative_error=run.errors[k] if run.errors else nan,
            seconds=run.seconds[k] if record_time else nan,
        ))
    return rows


def write_iteration_log(path, rows: list[LogRow], header: dict | None = None) -> None:
    lines = _header_lines(header) + ["# k residual_norm step_norm relative_error seconds"]
    for r in rows:
        lines.append(f"{r.k} {_f(r.residual_norm)} {_f(r.step_norm)} {_f(r.relative_error)} {_f(r.seconds)}")
    _write(path, lines)


def read_iteration_log(path) -> list[LogRow]:
    return [LogRow(int(r[0]), *(float(v) for v in r[1:])) for r in _rows(path)]


# summary --------------------------------------------------------------------

@dataclass
class SummaryRow:
    name: str
    alpha: float
    beta: float
    gamma: float
    delta: float
    seed: int
    N: int
    iterations: int
    final_epsilon: float

    @property
    def key(self) -> tuple:
        return (self.name, self.alpha, self.beta, self.gamma, self.delta, self.seed, self.N)

    def format(self) -> str:
        return (f"{self.name} {_f(self.alpha)} {_f(self.beta)} {_f(self.gamma)} {_f(self.delta)} "
                f"{self.seed} {self.N} {self.iterations} {_f(self.final_epsilon)}")

    @classmethod
    def parse(cls, parts: list[str]) -> "SummaryRow":
        types = [f.type for f in fields(cls)]
        conv = {"str": str, "float": float, "int": int}
        return cls(*(conv[t](p) for t, p in zip(types, parts)))


SUMMARY_COLUMNS = "name alpha beta gamma delta seed N iterations final_epsilon"


def read_summary(path) -> list[SummaryRow]:
    if not Path(path).exists():
        return []
    return [SummaryRow.parse(r) for r in _rows(path)]


def upsert_summary(path, row: SummaryRow) -> None:
    """Insert ``row``, replacing any earlier row with the same sweep key."""
    rows = [r for r in read_summary(path) if r.key != row.key]
    rows.append(row)
    _write(path, [f"# {SUMMARY_COLUMNS}"] + [r.format() for r in rows])
