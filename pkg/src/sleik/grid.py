"""Uniform rectangular grids, per-node scalar fields, and bilinear interpolation.

Nodes are enumerated row-major by j then i, ``m = j*nx + i``, with node (i, j)
at ``(x_i, y_j)``.  The interpolation operator returns a convex combination of
the four corner values of the cell containing the query point, so it is
monotone, reproduces constants and affine functions, and never leaves the
range of the nodal values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Domain",
    "Grid",
    "NodeField",
    "OutsideDomainError",
    "build_grid",
    "locate",
    "interpolate",
    "write_field_csv",
]

# Points this far outside the box (relative to the mesh size) still count as
# inside; absorbs floating-point drift of foot points landing on the boundary.
BOUNDARY_TOL_FACTOR = 1e-12


class OutsideDomainError(ValueError):
    """Query point lies outside the closed domain."""


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box (xmin, xmax) x (ymin, ymax)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(
                f"degenerate domain: [{self.xmin}, {self.xmax}] x "
                f"[{self.ymin}, {self.ymax}]"
            )

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height


class Grid:
    """Uniform rectangular grid with ``nx * ny`` nodes over a box domain.

    Coordinates are generated as the endpoint interpolation
    ``x_i = xmin*(1 - i/(nx-1)) + xmax*(i/(nx-1))`` so that both endpoints are
    exact and, on symmetric domains, the midline sits at exactly 0.0.  This
    matters for problems whose coefficients jump across an axis: the node on
    the interface must sample the interface value, not a value 1 ulp to the
    side of it.
    """

    def __init__(self, domain: Domain, nx: int, ny: int):
        nx, ny = int(nx), int(ny)
        if nx < 2 or ny < 2:
            raise ValueError(f"need at least 2 nodes per axis, got nx={nx}, ny={ny}")
        self.domain = domain
        self.nx = nx
        self.ny = ny
        self.dx1 = domain.width / (nx - 1)
        self.dx2 = domain.height / (ny - 1)
        # Reported mesh size: the larger of the two spacings.
        self.dx = max(self.dx1, self.dx2)
        tx = np.arange(nx) / (nx - 1)
        ty = np.arange(ny) / (ny - 1)
        self.xs = domain.xmin * (1.0 - tx) + domain.xmax * tx
        self.ys = domain.ymin * (1.0 - ty) + domain.ymax * ty
        self.n_nodes = nx * ny
        self.tol = BOUNDARY_TOL_FACTOR * self.dx

    def __repr__(self):
        return f"Grid({self.domain!r}, nx={self.nx}, ny={self.ny})"

    # -- indexing -----------------------------------------------------------

    def node_index(self, i, j):
        return np.asarray(j) * self.nx + np.asarray(i)

    def node_xy(self, i, j):
        """Coordinates of node (i, j); accepts arrays."""
        return self.xs[np.asarray(i)], self.ys[np.asarray(j)]

    def node_coords(self):
        """All node coordinates as flat arrays (x, y), row-major by j then i."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return X.ravel(), Y.ravel()

    def boundary_mask(self) -> np.ndarray:
        """Boolean mask over flat node index: True iff i in {0, nx-1} or j in {0, ny-1}."""
        m = np.zeros((self.ny, self.nx), dtype=bool)
        m[0, :] = m[-1, :] = True
        m[:, 0] = m[:, -1] = True
        return m.ravel()

    def is_boundary(self, i, j):
        return (i == 0) | (i == self.nx - 1) | (j == 0) | (j == self.ny - 1)

    # -- point location and interpolation ------------------------------------

    def locate_many(self, x, y):
        """Vectorised cell lookup.

        Returns (ci, cj, inside).  For points inside the closed domain (up to
        the boundary tolerance), (ci, cj) indexes the containing cell, with
        ties on shared cell faces resolved toward the lower-index cell.  The
        cell indices of outside points are clamped and meaningless.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = self.domain
        inside = (
            (x >= d.xmin - self.tol)
            & (x <= d.xmax + self.tol)
            & (y >= d.ymin - self.tol)
            & (y <= d.ymax + self.tol)
        )
        xc = np.clip(x, d.xmin, d.xmax)
        yc = np.clip(y, d.ymin, d.ymax)
        ci = np.floor((xc - d.xmin) / self.dx1).astype(np.int64)
        cj = np.floor((yc - d.ymin) / self.dx2).astype(np.int64)
        np.clip(ci, 0, self.nx - 2, out=ci)
        np.clip(cj, 0, self.ny - 2, out=cj)
        # Tie-break: a point exactly on an interior grid line belongs to the
        # lower-index cell.
        on_left_edge = (xc == self.xs[ci]) & (ci > 0)
        ci = np.where(on_left_edge, ci - 1, ci)
        on_bottom_edge = (yc == self.ys[cj]) & (cj > 0)
        cj = np.where(on_bottom_edge, cj - 1, cj)
        return ci, cj, inside

    def interp_stencil(self, x, y):
        """Bilinear stencil for a batch of query points.

        Returns (idx, w, inside) where idx is (n, 4) flat node indices, w is
        (n, 4) convex weights (each in [0, 1], summing to 1), and inside marks
        points within the closed domain.  Rows of outside points are zeroed.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ci, cj, inside = self.locate_many(x, y)
        xc = np.clip(x, self.domain.xmin, self.domain.xmax)
        yc = np.clip(y, self.domain.ymin, self.domain.ymax)
        x0 = self.xs[ci]
        x1 = self.xs[ci + 1]
        y0 = self.ys[cj]
        y1 = self.ys[cj + 1]
        s = np.clip((xc - x0) / (x1 - x0), 0.0, 1.0)
        t = np.clip((yc - y0) / (y1 - y0), 0.0, 1.0)
        base = cj * self.nx + ci
        idx = np.stack([base, base + 1, base + self.nx, base + self.nx + 1], axis=-1)
        w = np.stack(
            [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t], axis=-1
        )
        if not inside.all():
            bad = ~inside
            idx[bad] = 0
            w[bad] = 0.0
        return idx, w, inside


def build_grid(domain: Domain, nx: int, ny: int) -> Grid:
    """Uniform grid with nx x ny nodes; spacing (width/(nx-1), height/(ny-1))."""
    return Grid(domain, nx, ny)


class NodeField:
    """One finite scalar value per grid node, ordered row-major by j then i."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        v = np.asarray(values, dtype=float)
        if v.shape != (grid.n_nodes,):
            raise ValueError(
                f"field length {v.shape} does not match grid with "
                f"{grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("node field contains non-finite values")
        self.grid = grid
        self.values = v

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "NodeField":
        x, y = grid.node_coords()
        return cls(grid, np.broadcast_to(np.asarray(fn(x, y), dtype=float), x.shape).copy())

    @classmethod
    def full(cls, grid: Grid, value: float) -> "NodeField":
        return cls(grid, np.full(grid.n_nodes, float(value)))

    def matrix(self) -> np.ndarray:
        """Values as an (ny, nx) array, row j by column i."""
        return self.values.reshape(self.grid.ny, self.grid.nx)

    def copy(self) -> "NodeField":
        return NodeField(self.grid, self.values.copy())


def locate(grid: Grid, p) -> tuple[int, int] | None:
    """Cell (ci, cj) containing point p, or None when p is outside.

    Outside means beyond the closed domain by more than the boundary
    tolerance.  Points exactly on a shared cell face go to the lower-index
    cell.
    """
    ci, cj, inside = grid.locate_many([p[0]], [p[1]])
    if not inside[0]:
        return None
    return int(ci[0]), int(cj[0])


def interpolate(field: NodeField, p) -> float:
    """Piecewise-bilinear interpolation of a node field at point p."""
    idx, w, inside = field.grid.interp_stencil([p[0]], [p[1]])
    if not inside[0]:
        raise OutsideDomainError(f"point {tuple(p)} is outside the domain")
    return float(w[0] @ field.values[idx[0]])


def write_field_csv(field: NodeField, path) -> None:
    """Dump a node field as CSV `x,y,value`, row-major by j then i.

    Numbers use 17 significant digits with '.' as the decimal separator, which
    round-trips float64 exactly.
    """
    x, y = field.grid.node_coords()
    data = np.column_stack([x, y, field.values])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header="x,y,value", comments="")
