"""Error norms against exact solutions and multi-resolution convergence studies.

Errors are measured in the original variable u (after the inverse transform),
sampled at the grid nodes: the max norm is the plain nodal maximum, the
integral norm is the Riemann sum dx1*dx2*sum|.| over all nodes, with no
exclusion band around discontinuity interfaces.  Experimental orders are
log2 of the error ratio under grid halving.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from io import StringIO

import numpy as np

from .grid import Grid, NodeField, build_grid
from .problem import Benchmark
from .solver import SolverConfig, solve

__all__ = [
    "ErrorReport",
    "StudyRow",
    "StudyTable",
    "linf_error",
    "l1_error",
    "order",
    "error_report",
    "convergence_study",
]


@dataclass(frozen=True)
class ErrorReport:
    """Nodal max and integral errors of one run."""

    linf: float
    l1: float
    dx: float
    h: float
    n_nodes: int


def linf_error(u: NodeField, exact) -> float:
    """Max over all nodes of |u(node) - exact(node)|."""
    x, y = u.grid.node_coords()
    return float(np.max(np.abs(u.values - np.asarray(exact(x, y), dtype=float))))


def l1_error(u: NodeField, exact, grid: Grid) -> float:
    """dx1*dx2 * sum over all nodes of |u(node) - exact(node)|.

    Every node carries the full cell weight, so the quadrature slightly
    overcounts the domain area (by the factor nx/(nx-1) * ny/(ny-1)); this is
    the convention the study tables use.
    """
    if u.grid is not grid and (u.grid.nx, u.grid.ny) != (grid.nx, grid.ny):
        raise ValueError("field and grid arguments do not match")
    x, y = grid.node_coords()
    return float(grid.dx1 * grid.dx2 * np.sum(np.abs(u.values - np.asarray(exact(x, y), dtype=float))))


def order(e_coarse: float, e_fine: float) -> float:
    """Experimental order log2(e_coarse / e_fine) under grid halving."""
    if not (e_coarse > 0 and e_fine > 0):
        raise ValueError(f"orders need positive errors, got {e_coarse} and {e_fine}")
    return float(np.log2(e_coarse / e_fine))


def error_report(u: NodeField, exact, h: float) -> ErrorReport:
    grid = u.grid
    return ErrorReport(
        linf=linf_error(u, exact),
        l1=l1_error(u, exact, grid),
        dx=grid.dx,
        h=float(h),
        n_nodes=grid.n_nodes,
    )


@dataclass(frozen=True)
class StudyRow:
    dx: float
    h: float
    linf: float
    ord_linf: float | None
    l1: float
    ord_l1: float | None
    converged: bool = True


@dataclass(frozen=True)
class StudyTable:
    """Rows of a refinement study, coarse to fine, dx halving between rows."""

    name: str
    rows: tuple[StudyRow, ...]

    def to_csv(self) -> str:
        out = StringIO()
        out.write("dx,h,linf,ord_linf,l1,ord_l1\n")
        for r in self.rows:
            cells = [
                f"{r.dx:.17g}",
                f"{r.h:.17g}",
                f"{r.linf:.17g}",
                "" if r.ord_linf is None else f"{r.ord_linf:.17g}",
                f"{r.l1:.17g}",
                "" if r.ord_l1 is None else f"{r.ord_l1:.17g}",
            ]
            out.write(",".join(cells) + "\n")
        return out.getvalue()

    def to_text(self) -> str:
        header = f"{'dx = h':>12}  {'max err':>12}  {'ord':>8}  {'L1 err':>12}  {'ord':>8}"
        lines = [f"study: {self.name}", header, "-" * len(header)]
        for r in self.rows:
            o1 = "" if r.ord_linf is None else f"{r.ord_linf:8.4f}"
            o2 = "" if r.ord_l1 is None else f"{r.ord_l1:8.4f}"
            mark = "" if r.converged else "  [not converged]"
            lines.append(
                f"{r.dx:12.6g}  {r.linf:12.5e}  {o1:>8}  {r.l1:12.5e}  {o2:>8}{mark}"
            )
        return "\n".join(lines) + "\n"


def _grid_for_resolution(benchmark: Benchmark, dx: float) -> Grid:
    dom = benchmark.problem.domain
    nx = dom.width / dx
    ny = dom.height / dx
    if abs(nx - round(nx)) > 1e-9 * max(1.0, nx) or abs(ny - round(ny)) > 1e-9 * max(1.0, ny):
        raise ValueError(f"resolution dx={dx} does not divide the domain evenly")
    return build_grid(dom, int(round(nx)) + 1, int(round(ny)) + 1)


def convergence_study(
    benchmark: Benchmark, resolutions, config: SolverConfig
) -> StudyTable:
    """One solve per resolution with h = dx, errors and orders per row.

    `resolutions` must decrease by a factor 2 between consecutive entries
    (a single entry is allowed); config.h is replaced row by row.
    """
    res = [float(r) for r in resolutions]
    if not res:
        raise ValueError("no resolutions given")
    for a, b in zip(res, res[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise ValueError(f"resolutions must halve: {a} -> {b}")

    rows: list[StudyRow] = []
    prev: StudyRow | None = None
    for dx in res:
        grid = _grid_for_resolution(benchmark, dx)
        cfg = dataclasses.replace(config, h=dx)
        result = solve(benchmark.problem, grid, cfg)
        rep = error_report(result.u, benchmark.exact_u, cfg.h)
        row = StudyRow(
            dx=dx,
            h=cfg.h,
            linf=rep.linf,
            ord_linf=None if prev is None else order(prev.linf, rep.linf),
            l1=rep.l1,
            ord_l1=None if prev is None else order(prev.l1, rep.l1),
            converged=result.converged,
        )
        rows.append(row)
        prev = row
    return StudyTable(name=benchmark.name, rows=tuple(rows))
