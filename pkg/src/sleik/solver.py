"""Semi-Lagrangian value iteration for the transformed Dirichlet problem.

The nonnegative unknown u is mapped to W = 1 - exp(-u) in [0, 1), which turns
the stationary equation into a fixed-point problem with discount factor
1/(1+h).  On the grid the scheme reads, at every interior node x_m,

    W_m = min_a [ I[W](x_m - (h / f(x_m)) sigma(x_m) a) + h ] / (1 + h),

where the min runs over a finite set of controls a with |a| <= 1 and I[W] is
the piecewise-bilinear interpolant; boundary nodes hold W = 1 - exp(-g).
Controls whose foot point leaves the closed domain are skipped (the zero
control keeps the node itself feasible, so the min is never empty).

Because the interpolation weights form a convex combination, one sweep of the
operator is a max-norm contraction with factor 1/(1+h): Jacobi-style value
iteration converges geometrically from any start field, and is started here
from W = 1 on interior nodes (the transform of an infinite cost), which makes
the iterates decrease monotonically.

Feet and stencils do not depend on the iterate, so they are assembled once
into a stacked sparse matrix (one block of rows per control); a sweep is then
a single sparse mat-vec, a min across the control blocks, and the update
above.  Node updates within a sweep are independent; the min is reduced in
control-list order, so results do not depend on how the work is scheduled.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import Grid, NodeField
from .problem import Problem

__all__ = [
    "ControlSet",
    "SolverConfig",
    "SolveResult",
    "CflReport",
    "CflViolationError",
    "BellmanOperator",
    "kruzkov",
    "inverse_kruzkov",
    "control_set",
    "foot_point",
    "apply_T",
    "check_cfl",
    "solve",
]

logger = logging.getLogger(__name__)

# Transformed values this close to 1 are clamped before the inverse transform.
EPS_V = 1e-12

_CLAMP_LD = np.longdouble(1.0) - np.longdouble(EPS_V)
_U_CLAMP = -np.log(np.longdouble(EPS_V))  # clamped inverse value -ln(EPS_V)


class CflViolationError(RuntimeError):
    """Step-ratio restriction h/dx < rho/M_sigma violated under policy 'enforce'."""


def kruzkov(u):
    """Map u >= 0 to 1 - exp(-u) in [0, 1).

    Evaluated and returned in extended precision: near 1 a float64 result
    cannot retain enough of 1 - exp(-u) for the inverse transform to recover
    u to ~1e-10 once u exceeds about 14.  Keep the returned value unreduced
    when that accuracy matters; it degrades gracefully if cast to float64.
    """
    u_ld = np.asarray(u, dtype=np.longdouble)
    if np.any(u_ld < 0):
        raise ValueError("the transform needs u >= 0")
    out = -np.expm1(-u_ld)
    return out if out.ndim else out[()]


def inverse_kruzkov(v):
    """Map v in [0, 1) back to u = -ln(1 - v) >= 0.

    Values at or above 1 - 1e-12 are clamped to -ln(1e-12) ~ 27.63 and a
    RuntimeWarning is emitted; negative values raise.  Computed in extended
    precision; together with `kruzkov` the round trip holds to ~1e-11 for
    u in [0, 20].
    """
    v_ld = np.asarray(v, dtype=np.longdouble)
    if np.any(v_ld < 0):
        raise ValueError("the inverse transform needs v >= 0")
    clip = v_ld >= _CLAMP_LD
    n_clip = int(np.count_nonzero(clip))
    if n_clip:
        warnings.warn(
            f"inverse transform clamped {n_clip} value(s) at 1 - {EPS_V:g}",
            RuntimeWarning,
            stacklevel=2,
        )
        v_ld = np.where(clip, np.longdouble(0.5), v_ld)
    out = -np.log1p(-v_ld)
    if n_clip:
        out = np.where(clip, _U_CLAMP, out)
    return out if out.ndim else out[()]


@dataclass(frozen=True, eq=False)
class ControlSet:
    """Finite set of controls a in R^M with |a| <= 1, including the zero control."""

    vectors: np.ndarray  # (n, M)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] not in (1, 2):
            raise ValueError(f"control vectors must be (n, M) with M in {{1, 2}}, got {v.shape}")
        norms = np.sqrt((v**2).sum(axis=1))
        if norms.max(initial=0.0) > 1.0 + 1e-15:
            raise ValueError("control set contains vectors with |a| > 1")
        if not np.any(norms == 0.0):
            raise ValueError("control set must contain the zero control")
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def m(self) -> int:
        return self.vectors.shape[1]


def control_set(n_directions: int, m: int = 2) -> ControlSet:
    """Unit-sphere directions plus the zero control.

    For M=2: n_directions unit vectors at angles 2*pi*k/n_directions followed
    by the zero control (components below 1e-15 in magnitude are snapped to
    0.0 so the axis directions are exact).  For M=1: {-1, 0, +1}.
    """
    n_directions = int(n_directions)
    if n_directions < 4:
        raise ValueError(f"need at least 4 directions, got {n_directions}")
    if m == 2:
        ang = 2.0 * np.pi * np.arange(n_directions) / n_directions
        vec = np.column_stack([np.cos(ang), np.sin(ang)])
        vec[np.abs(vec) < 1e-15] = 0.0
        vec = np.vstack([vec, [0.0, 0.0]])
    elif m == 1:
        vec = np.array([[-1.0], [0.0], [1.0]])
    else:
        raise ValueError(f"control dimension M must be 1 or 2, got {m}")
    return ControlSet(vec)


def foot_point(x, a, problem: Problem, h: float):
    """Upwind point x - (h / f(x)) * sigma(x) a for one node and one control."""
    px, py = float(x[0]), float(x[1])
    fv = float(problem.f(px, py))
    if fv <= 0:
        raise ValueError(f"f({px}, {py}) = {fv} <= 0 violates the problem contract")
    sig = problem.sigma.eval(px, py)  # (2, M)
    disp = sig @ np.asarray(a, dtype=float)
    return px - (h / fv) * disp[0], py - (h / fv) * disp[1]


@dataclass(frozen=True)
class CflReport:
    """Realized step ratio h/dx against the admissible bound rho/M_sigma."""

    h_over_dx: float
    rho_over_m_sigma: float

    @property
    def satisfied(self) -> bool:
        return self.h_over_dx < self.rho_over_m_sigma


def check_cfl(problem: Problem, grid: Grid, h: float, policy: str = "ignore") -> CflReport:
    """Step-ratio report; warns or raises per policy when h/dx >= rho/M_sigma."""
    if not h > 0:
        raise ValueError(f"pseudo-time step h must be positive, got {h}")
    if policy not in ("enforce", "warn", "ignore"):
        raise ValueError(f"unknown cfl policy {policy!r}")
    report = CflReport(h / grid.dx, problem.f.rho / problem.sigma.m_sigma)
    if not report.satisfied:
        msg = (
            f"step ratio h/dx = {report.h_over_dx:g} is not below "
            f"rho/M_sigma = {report.rho_over_m_sigma:g}; the integral-norm "
            f"error bound is not guaranteed"
        )
        if policy == "enforce":
            raise CflViolationError(msg)
        if policy == "warn":
            logger.warning(msg)
    return report


@dataclass(frozen=True)
class SolverConfig:
    """Iteration parameters.

    max_iter = None resolves to ceil(ln(1/tol) / ln(1+h)) + 100, the count at
    which the geometric contraction bound alone pushes the residual below tol.
    """

    h: float
    n_directions: int = 64
    tol: float = 1e-9
    max_iter: int | None = None
    cfl_policy: str = "warn"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.n_directions < 4:
            raise ValueError(f"n_directions must be >= 4, got {self.n_directions}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.cfl_policy not in ("enforce", "warn", "ignore"):
            raise ValueError(f"unknown cfl policy {self.cfl_policy!r}")

    def resolved_max_iter(self) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return math.ceil(math.log(1.0 / self.tol) / math.log1p(self.h)) + 100


@dataclass
class SolveResult:
    """Converged (or truncated) iteration output.

    w holds the transformed variable in [0, 1]; u = -ln(1 - w) nodewise with
    values clamped at w = 1 - 1e-12 (their indices are in clamped_nodes).
    residual_history[n] is the max-norm difference between sweeps n and n+1.
    """

    w: NodeField
    u: NodeField
    iterations: int
    residual_history: np.ndarray
    cfl: CflReport
    converged: bool
    clamped_nodes: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


class BellmanOperator:
    """One sweep of the discrete fixed-point operator on a fixed discretization.

    Assembles, per control, the foot points of all interior nodes and their
    bilinear stencils into one stacked sparse matrix; infeasible (node,
    control) pairs - feet outside the closed domain - are masked out of the
    min.  Boundary nodes are copied through unchanged, so the operator is a
    contraction with factor 1/(1+h) over fields that agree on the boundary.
    """

    def __init__(self, problem: Problem, grid: Grid, controls: ControlSet, h: float):
        if not h > 0:
            raise ValueError(f"pseudo-time step h must be positive, got {h}")
        if controls.m != problem.sigma.m:
            raise ValueError(
                f"control dimension {controls.m} does not match sigma with "
                f"M = {problem.sigma.m} columns"
            )
        self.grid = grid
        self.h = float(h)

        x, y = grid.node_coords()
        f_nodes = problem.f(x, y)
        if np.any(f_nodes <= 0):
            raise ValueError("f is not positive on all grid nodes")
        if f_nodes.min() < problem.f.rho - 1e-12:
            raise ValueError(
                f"f drops to {f_nodes.min():g} on the grid, below the declared "
                f"floor rho = {problem.f.rho:g}"
            )
        sig_nodes = problem.sigma.eval(x, y)  # (L, 2, M)
        row_sums = np.abs(sig_nodes).sum(axis=2)
        if row_sums.max() > problem.sigma.m_sigma + 1e-12:
            raise ValueError(
                f"max absolute row sum of sigma on the grid is {row_sums.max():g}, "
                f"above the declared bound M_sigma = {problem.sigma.m_sigma:g}"
            )

        interior = ~grid.boundary_mask()
        self.interior_idx = np.flatnonzero(interior)
        xi, yi = x[self.interior_idx], y[self.interior_idx]
        scale = self.h / f_nodes[self.interior_idx]  # (Li,)
        sig_i = sig_nodes[self.interior_idx]  # (Li, 2, M)

        n_int = self.interior_idx.size
        n_ctrl = controls.n
        idx_blocks = np.empty((n_ctrl, n_int, 4), dtype=np.int64)
        w_blocks = np.empty((n_ctrl, n_int, 4))
        feasible = np.empty((n_ctrl, n_int), dtype=bool)
        for k, a in enumerate(controls.vectors):
            disp = sig_i @ a  # (Li, 2)
            fx = xi - scale * disp[:, 0]
            fy = yi - scale * disp[:, 1]
            idx, w, inside = grid.interp_stencil(fx, fy)
            idx_blocks[k] = idx
            w_blocks[k] = w
            feasible[k] = inside
        if not feasible.any(axis=0).all():
            # The zero control keeps every node feasible; reaching this means
            # the control set violated its contract.
            raise ValueError("a node has no feasible control (zero control missing?)")

        n_rows = n_ctrl * n_int
        indptr = np.arange(0, 4 * n_rows + 4, 4)
        self._matrix = sp.csr_matrix(
            (w_blocks.reshape(-1), idx_blocks.reshape(n_rows, 4).ravel(), indptr),
            shape=(n_rows, grid.n_nodes),
        )
        self._feasible = feasible
        self._n_ctrl = n_ctrl
        self._n_int = n_int

    def apply(self, w: np.ndarray) -> np.ndarray:
        """One sweep: returns the updated field; boundary entries are copied."""
        w = np.asarray(w, dtype=float)
        vals = (self._matrix @ w).reshape(self._n_ctrl, self._n_int)
        vals = np.where(self._feasible, vals, np.inf)
        best = vals.min(axis=0)
        out = w.copy()
        # (min + h)/(1+h) rather than min/(1+h) + h/(1+h): a single division
        # keeps the constant-one field a fixed point to 1 ulp; the cap repairs
        # that ulp so the [0, 1] range is preserved exactly (min against a
        # constant is 1-Lipschitz, so the contraction bound is unaffected).
        out[self.interior_idx] = np.minimum((best + self.h) / (1.0 + self.h), 1.0)
        return out


def apply_T(w: NodeField, problem: Problem, grid: Grid, controls: ControlSet, h: float) -> NodeField:
    """One sweep of the discrete operator (builds the stencils afresh).

    For repeated sweeps on the same discretization construct a
    BellmanOperator once and call `apply`.
    """
    if w.grid is not grid:
        raise ValueError("field and grid arguments do not match")
    op = BellmanOperator(problem, grid, controls, h)
    return NodeField(grid, op.apply(w.values))


def solve(problem: Problem, grid: Grid, config: SolverConfig) -> SolveResult:
    """Value iteration to the fixed point of the discrete operator.

    Starts from W = 1 on interior nodes and W = 1 - exp(-g) on the boundary,
    sweeps until the max-norm difference between consecutive iterates drops
    below config.tol or the iteration cap is reached, and returns both the
    transformed field and u.  Fully deterministic: identical inputs give
    bit-identical outputs.
    """
    cfl = check_cfl(problem, grid, config.h, policy=config.cfl_policy)
    controls = control_set(config.n_directions, m=problem.sigma.m)
    op = BellmanOperator(problem, grid, controls, config.h)

    bmask = grid.boundary_mask()
    x, y = grid.node_coords()
    g_vals = np.asarray(problem.g(x[bmask], y[bmask]), dtype=float)
    g_vals = np.broadcast_to(g_vals, (int(bmask.sum()),))
    if not np.all(np.isfinite(g_vals)):
        raise ValueError("boundary data g is not finite at every boundary node")
    if np.any(g_vals < 0):
        raise ValueError("boundary data g must be nonnegative")

    w = np.ones(grid.n_nodes)
    w[bmask] = -np.expm1(-g_vals)

    max_iter = config.resolved_max_iter()
    history = np.empty(max_iter)
    converged = False
    n_done = 0
    for n in range(max_iter):
        w_next = op.apply(w)
        res = float(np.max(np.abs(w_next - w)))
        history[n] = res
        w = w_next
        n_done = n + 1
        if res < config.tol:
            converged = True
            break
    if not converged:
        logger.warning(
            "no convergence after %d sweeps (last residual %.3e, tol %.3e); "
            "returning the partial iterate",
            n_done,
            history[n_done - 1],
            config.tol,
        )

    clamp = w >= 1.0 - EPS_V
    u = -np.log1p(-np.minimum(w, 1.0 - EPS_V))
    return SolveResult(
        w=NodeField(grid, w),
        u=NodeField(grid, u),
        iterations=n_done,
        residual_history=history[:n_done].copy(),
        cfl=cfl,
        converged=converged,
        clamped_nodes=np.flatnonzero(clamp),
    )
