"""Problem data for the degenerate anisotropic eikonal Dirichlet problem.

The equation solved is

    max_{|a| <= 1} { -Du(x) . sigma(x) a } = f(x)   in Omega,
    u = g                                           on the boundary,

with f Borel measurable, bounded below by rho > 0 and allowed to jump, and
sigma a possibly degenerate 2 x M matrix field (M in {1, 2}).  With
sigma = identity this is the classical eikonal equation |Du| = f.

Because f may be discontinuous, its lower and upper semicontinuous envelopes
matter for the weak (viscosity) solution concept; piecewise definitions can
carry evaluable envelopes alongside the pointwise values.  The two benchmark
problems bundled here have known solutions and exercise, respectively, a
discontinuous right-hand side with a continuous solution and a degenerate
sigma with a discontinuous solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Domain

__all__ = [
    "RhsField",
    "SigmaField",
    "Problem",
    "Benchmark",
    "Region",
    "PiecewiseField",
    "make_envelope_pair",
    "eikonal_problem",
    "test1_benchmark",
    "test2_benchmark",
]

_SQRT3 = np.sqrt(3.0)


def constant_fn(c: float) -> Callable:
    """A point function that broadcasts a constant over (x, y) arrays."""
    c = float(c)

    def fn(x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, c)

    return fn


class RhsField:
    """Right-hand side f as a point-evaluable function with a declared floor.

    `fn(x, y)` must broadcast over numpy arrays.  `rho` is the declared lower
    bound (f >= rho > 0 everywhere); the solver spot-checks it on the nodes it
    visits.  `lower` and `upper` are optional evaluable semicontinuous
    envelopes used by diagnostics; where provided they must sandwich fn.
    """

    def __init__(self, fn, rho: float, lower=None, upper=None):
        if not rho > 0:
            raise ValueError(f"rho must be positive, got {rho}")
        self.fn = fn
        self.rho = float(rho)
        self.lower = lower
        self.upper = upper

    def __call__(self, x, y):
        return np.asarray(self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)

    @classmethod
    def constant(cls, c: float) -> "RhsField":
        return cls(constant_fn(c), rho=float(c))


class SigmaField:
    """Matrix field sigma: Omega -> R^{2 x M}; columns are the dynamics' vector fields.

    `eval(x, y)` returns an array of shape broadcast(x, y).shape + (2, M).
    `m_sigma` is the declared bound on the maximum absolute row sum
    max_i sum_k |sigma_ik(x)|; the solver checks it on grid nodes.
    """

    def __init__(self, fn, m: int, m_sigma: float):
        if m not in (1, 2):
            raise ValueError(f"column count M must be 1 or 2, got {m}")
        if not m_sigma > 0:
            raise ValueError(f"m_sigma must be positive, got {m_sigma}")
        self.fn = fn
        self.m = int(m)
        self.m_sigma = float(m_sigma)

    def eval(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.asarray(self.fn(x, y), dtype=float)
        want = np.broadcast(x, y).shape + (2, self.m)
        if out.shape != want:
            raise ValueError(f"sigma evaluation has shape {out.shape}, expected {want}")
        return out

    @classmethod
    def identity(cls) -> "SigmaField":
        """The 2x2 identity everywhere (isotropic unit dynamics)."""

        def fn(x, y):
            shape = np.broadcast(x, y).shape
            out = np.zeros(shape + (2, 2))
            out[..., 0, 0] = 1.0
            out[..., 1, 1] = 1.0
            return out

        return cls(fn, m=2, m_sigma=1.0)

    @classmethod
    def diagonal(cls, s11, s22, m_sigma: float) -> "SigmaField":
        """diag(s11, s22) with entries given as constants or callables of (x, y)."""
        f11 = s11 if callable(s11) else constant_fn(s11)
        f22 = s22 if callable(s22) else constant_fn(s22)

        def fn(x, y):
            shape = np.broadcast(x, y).shape
            out = np.zeros(shape + (2, 2))
            out[..., 0, 0] = f11(x, y)
            out[..., 1, 1] = f22(x, y)
            return out

        return cls(fn, m=2, m_sigma=float(m_sigma))

    @classmethod
    def single_column(cls, c1, c2, m_sigma: float) -> "SigmaField":
        """A 2x1 sigma (M=1): dynamics restricted to the span of one vector field."""
        f1 = c1 if callable(c1) else constant_fn(c1)
        f2 = c2 if callable(c2) else constant_fn(c2)

        def fn(x, y):
            shape = np.broadcast(x, y).shape
            out = np.zeros(shape + (2, 1))
            out[..., 0, 0] = f1(x, y)
            out[..., 1, 0] = f2(x, y)
            return out

        return cls(fn, m=1, m_sigma=float(m_sigma))


@dataclass(frozen=True)
class Problem:
    """The PDE data: domain, right-hand side, dynamics matrix, boundary data."""

    domain: Domain
    f: RhsField
    sigma: SigmaField
    g: Callable  # boundary function, evaluable at every boundary node


@dataclass(frozen=True)
class Benchmark:
    """A problem together with its known (viscosity) solution."""

    problem: Problem
    exact_u: Callable
    name: str


def eikonal_problem(domain: Domain, f: RhsField, g) -> Problem:
    """|Du| = f with Dirichlet data g: sigma is the 2x2 identity, M_sigma = 1."""
    return Problem(domain=domain, f=f, sigma=SigmaField.identity(), g=g)


# -- piecewise right-hand sides and their envelopes ---------------------------


@dataclass(frozen=True)
class Region:
    """Open axis-aligned box carrying one continuous branch of a piecewise field.

    Bounds may be +-inf.  The branch function must extend continuously to the
    closure of the box (it is evaluated on the closure when envelopes are
    formed).
    """

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    fn: Callable

    def closure_contains(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)


@dataclass(frozen=True)
class PiecewiseField:
    """A field defined everywhere, continuous on finitely many open regions.

    `fn` is the pointwise (Borel) evaluation used by the scheme, including its
    values on the interfaces between regions; `regions` are the open boxes of
    continuity whose closures must cover the domain.
    """

    fn: Callable
    regions: tuple[Region, ...]


def make_envelope_pair(pw: PiecewiseField, domain: Domain):
    """Lower/upper semicontinuous envelopes of a piecewise field.

    At a point x the lower envelope is the minimum of the pointwise value and
    the limits of every branch whose region closure contains x; the upper
    envelope is the corresponding maximum.  In region interiors both equal the
    field itself.

    Raises ValueError when the region closures fail to cover the domain
    (checked on a midpoint sample lattice).
    """
    if not pw.regions:
        raise ValueError("piecewise field has no regions")
    n = 64
    sx = domain.xmin + (np.arange(n) + 0.5) * (domain.width / n)
    sy = domain.ymin + (np.arange(n) + 0.5) * (domain.height / n)
    SX, SY = np.meshgrid(sx, sy)
    covered = np.zeros(SX.shape, dtype=bool)
    for r in pw.regions:
        covered |= r.closure_contains(SX, SY)
    if not covered.all():
        raise ValueError("region closures do not cover the domain")

    def _envelope(reduce_fn):
        def env(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            best = np.array(
                np.broadcast_to(np.asarray(pw.fn(x, y), dtype=float), np.broadcast(x, y).shape),
                dtype=float,
            )
            for r in pw.regions:
                mask = r.closure_contains(x, y)
                val = np.broadcast_to(np.asarray(r.fn(x, y), dtype=float), best.shape)
                best = np.where(mask, reduce_fn(best, val), best)
            return best

        return env

    return _envelope(np.minimum), _envelope(np.maximum)


# -- benchmark problems -------------------------------------------------------


def test1_benchmark() -> Benchmark:
    """Front propagation through a medium whose speed jumps across x = 0.

    On (-1, 1) x (0, 2), |Du| = f with f = 1 for x < 0, 3/4 on the interface
    x = 0 and 1/2 for x > 0.  The solution is continuous and piecewise affine:
    refraction bends the arrival-time level lines across the interface.
    Boundary data is the restriction of the solution.
    """
    domain = Domain(-1.0, 1.0, 0.0, 2.0)

    def f_pointwise(x, y):
        return np.where(x < 0, 1.0, np.where(x > 0, 0.5, 0.75))

    regions = (
        Region(-np.inf, 0.0, -np.inf, np.inf, constant_fn(1.0)),
        Region(0.0, np.inf, -np.inf, np.inf, constant_fn(0.5)),
    )
    lower, upper = make_envelope_pair(PiecewiseField(f_pointwise, regions), domain)
    f = RhsField(f_pointwise, rho=0.5, lower=lower, upper=upper)

    def exact_u(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        mid = -(_SQRT3 / 2.0) * x + 0.5 * y
        return np.where(x >= 0, 0.5 * y, np.where(x >= -y / _SQRT3, mid, y))

    return Benchmark(
        problem=eikonal_problem(domain, f, exact_u),
        exact_u=exact_u,
        name="test1",
    )


def test2_benchmark() -> Benchmark:
    """Degenerate anisotropic problem with a discontinuous value function.

    On (-1, 1)^2, x^2 u_x^2 + u_y^2 = f^2 with f = 2 for x > 0 and 1 for
    x <= 0, zero boundary data, sigma = diag(x, 1).  The horizontal dynamics
    die on the line x = 0, so the solution jumps across it:

        u(x, y) = 2(1 - |y|)        x >= 0, |y| > 1 + ln x
                  -2 ln x           x > 0,  |y| <= 1 + ln x
                  u(-x, y) / 2      x < 0.

    The line x = 0 carries the limit from the right, which is the upper
    envelope of the solution there; convergence toward it can only hold in
    integral norms.
    """
    domain = Domain(-1.0, 1.0, -1.0, 1.0)

    def f_pointwise(x, y):
        return np.where(x > 0, 2.0, 1.0)

    regions = (
        Region(-np.inf, 0.0, -np.inf, np.inf, constant_fn(1.0)),
        Region(0.0, np.inf, -np.inf, np.inf, constant_fn(2.0)),
    )
    lower, upper = make_envelope_pair(PiecewiseField(f_pointwise, regions), domain)
    f = RhsField(f_pointwise, rho=1.0, lower=lower, upper=upper)

    # |x| <= 1 on the closed domain, so the absolute row sums of diag(x, 1)
    # are bounded by 1.
    sigma = SigmaField.diagonal(lambda x, y: np.asarray(x, dtype=float) + 0.0 * y, 1.0, m_sigma=1.0)

    def exact_u(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore"):
            ln = np.log(ax)  # -inf on the interface selects the outer branch
        base = np.where(np.abs(y) > 1.0 + ln, 2.0 * (1.0 - np.abs(y)), -2.0 * ln)
        return np.where(x >= 0, base, 0.5 * base)

    def g(x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    return Benchmark(
        problem=Problem(domain=domain, f=f, sigma=sigma, g=g),
        exact_u=exact_u,
        name="test2",
    )


# keep pytest from collecting the benchmark factories as tests
test1_benchmark.__test__ = False
test2_benchmark.__test__ = False
