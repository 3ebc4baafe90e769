import numpy as np
import pytest

from sleik import (
    Domain,
    PiecewiseField,
    Region,
    RhsField,
    SigmaField,
    build_grid,
    eikonal_problem,
    make_envelope_pair,
    test1_benchmark,
    test2_benchmark,
)
from sleik.problem import constant_fn

SQRT3 = np.sqrt(3.0)


def zero_g(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


# -- basic field types --------------------------------------------------------


def test_rhs_field_needs_positive_floor():
    with pytest.raises(ValueError):
        RhsField(constant_fn(1.0), rho=0.0)


def test_eikonal_problem_sigma_is_identity():
    prob = eikonal_problem(Domain(-1, 1, -1, 1), RhsField.constant(1.0), zero_g)
    assert prob.sigma.m == 2
    assert prob.sigma.m_sigma == 1.0
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-1, 1, 20), rng.uniform(-1, 1, 20)
    sig = prob.sigma.eval(x, y)
    assert sig.shape == (20, 2, 2)
    assert np.array_equal(sig, np.broadcast_to(np.eye(2), (20, 2, 2)))


def test_sigma_eval_scalar_shape():
    sig = SigmaField.diagonal(lambda x, y: x + 0.0 * y, 1.0, m_sigma=2.0)
    out = sig.eval(0.5, 0.25)
    assert out.shape == (2, 2)
    assert out[0, 0] == 0.5 and out[1, 1] == 1.0 and out[0, 1] == 0.0


def test_single_column_sigma():
    sig = SigmaField.single_column(0.0, 1.0, m_sigma=1.0)
    assert sig.m == 1
    out = sig.eval([0.1, 0.2], [0.3, 0.4])
    assert out.shape == (2, 2, 1)
    assert np.array_equal(out[:, 1, 0], [1.0, 1.0])


# -- benchmark 1: discontinuous speed, continuous solution ---------------------


def test1_exact_values():
    bench = test1_benchmark()
    u = bench.exact_u
    assert float(u(0.5, 1.0)) == pytest.approx(0.5, abs=1e-15)
    # -0.9 < -0.3/sqrt(3): outer branch u = x2
    assert float(u(-0.9, 0.3)) == pytest.approx(0.3, abs=1e-15)
    # middle branch: (sqrt(3)/2)*0.1 + 0.5
    assert float(u(-0.1, 1.0)) == pytest.approx(SQRT3 / 2 * 0.1 + 0.5, abs=1e-15)


def test1_f_branches():
    f = test1_benchmark().problem.f
    assert float(f(-0.5, 1.0)) == 1.0
    assert float(f(0.0, 1.0)) == 0.75
    assert float(f(0.5, 1.0)) == 0.5
    assert f.rho == 0.5


def test1_boundary_data_matches_exact():
    bench = test1_benchmark()
    grid = build_grid(bench.problem.domain, 41, 41)
    x, y = grid.node_coords()
    b = grid.boundary_mask()
    gv = np.asarray(bench.problem.g(x[b], y[b]), dtype=float)
    uv = np.asarray(bench.exact_u(x[b], y[b]), dtype=float)
    assert np.max(np.abs(gv - uv)) <= 1e-12


def test1_gradient_magnitude_equals_f():
    """|Du| = f away from the kink lines x1 = 0 and x1 = -x2/sqrt(3)."""
    bench = test1_benchmark()
    rng = np.random.default_rng(10)
    step, margin, checked = 1e-6, 1e-3, 0
    while checked < 1000:
        x = rng.uniform(-1 + margin, 1 - margin)
        y = rng.uniform(margin, 2 - margin)
        if abs(x) < margin or abs(x + y / SQRT3) < margin:
            continue
        ux = (bench.exact_u(x + step, y) - bench.exact_u(x - step, y)) / (2 * step)
        uy = (bench.exact_u(x, y + step) - bench.exact_u(x, y - step)) / (2 * step)
        grad = float(np.hypot(ux, uy))
        assert grad == pytest.approx(float(bench.problem.f(x, y)), abs=1e-4)
        checked += 1


# -- benchmark 2: degenerate dynamics, discontinuous solution ------------------


def test2_exact_values():
    bench = test2_benchmark()
    u = bench.exact_u
    assert float(u(1.0, 0.0)) == pytest.approx(0.0, abs=1e-15)
    assert float(u(np.exp(-1.0), 0.0)) == pytest.approx(2.0, abs=1e-12)
    assert float(u(0.5, 0.9)) == pytest.approx(0.2, abs=1e-15)
    # the interface column carries the limit from the right
    assert float(u(0.0, 0.0)) == pytest.approx(2.0, abs=1e-15)
    assert float(u(-0.5, 0.9)) == pytest.approx(0.1, abs=1e-15)


def test2_zero_boundary():
    bench = test2_benchmark()
    grid = build_grid(bench.problem.domain, 33, 33)
    x, y = grid.node_coords()
    b = grid.boundary_mask()
    uv = np.asarray(bench.exact_u(x[b], y[b]), dtype=float)
    assert np.max(np.abs(uv)) <= 1e-12


def test2_pde_residual_off_interfaces():
    """x^2 u_x^2 + u_y^2 = f^2 away from x = 0, y = 0 and the branch curves."""
    bench = test2_benchmark()
    rng = np.random.default_rng(11)
    step, margin, checked = 1e-6, 1e-3, 0
    while checked < 1000:
        x = rng.uniform(-1 + margin, 1 - margin)
        y = rng.uniform(-1 + margin, 1 - margin)
        if abs(x) < margin or abs(y) < margin:
            continue
        # keep clear of |y| = 1 + ln|x| (the kink between the two branches)
        if abs(abs(y) - (1.0 + np.log(abs(x)))) < margin:
            continue
        ux = (bench.exact_u(x + step, y) - bench.exact_u(x - step, y)) / (2 * step)
        uy = (bench.exact_u(x, y + step) - bench.exact_u(x, y - step)) / (2 * step)
        lhs = x * x * ux * ux + uy * uy
        f = float(bench.problem.f(x, y))
        assert lhs == pytest.approx(f * f, abs=1e-4)
        checked += 1


def test2_sigma_degenerates_on_the_axis():
    bench = test2_benchmark()
    sig = bench.problem.sigma.eval(0.0, 0.3)
    assert sig[0, 0] == 0.0 and sig[1, 1] == 1.0
    assert bench.problem.sigma.m_sigma == 1.0


# -- envelopes ----------------------------------------------------------------


def test_envelopes_test1_interface():
    f = test1_benchmark().problem.f
    assert float(f.lower(0.0, 1.0)) == 0.5
    assert float(f.upper(0.0, 1.0)) == 1.0
    # interior points: both equal f
    assert float(f.lower(0.5, 1.0)) == float(f.upper(0.5, 1.0)) == 0.5
    assert float(f.lower(-0.5, 1.0)) == float(f.upper(-0.5, 1.0)) == 1.0


def test_envelopes_test2_interface():
    f = test2_benchmark().problem.f
    assert float(f.lower(0.0, 0.0)) == 1.0
    assert float(f.upper(0.0, 0.0)) == 2.0


def test_envelope_sandwich_randomized():
    for bench in (test1_benchmark(), test2_benchmark()):
        f = bench.problem.f
        d = bench.problem.domain
        rng = np.random.default_rng(12)
        x = rng.uniform(d.xmin, d.xmax, 1000)
        y = rng.uniform(d.ymin, d.ymax, 1000)
        lo, mid, hi = f.lower(x, y), f(x, y), f.upper(x, y)
        assert (lo <= mid + 1e-15).all()
        assert (mid <= hi + 1e-15).all()


def test_make_envelope_pair_requires_coverage():
    domain = Domain(0, 1, 0, 1)
    regions = (Region(0.0, 0.4, 0.0, 1.0, constant_fn(1.0)),)
    with pytest.raises(ValueError, match="cover"):
        make_envelope_pair(PiecewiseField(constant_fn(1.0), regions), domain)


def test_make_envelope_pair_includes_pointwise_value():
    # interface value outside the branch range must widen the envelopes
    domain = Domain(-1, 1, 0, 1)
    regions = (
        Region(-np.inf, 0.0, -np.inf, np.inf, constant_fn(1.0)),
        Region(0.0, np.inf, -np.inf, np.inf, constant_fn(2.0)),
    )

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, np.where(x > 0, 2.0, 5.0))

    lower, upper = make_envelope_pair(PiecewiseField(fn, regions), domain)
    assert float(lower(0.0, 0.5)) == 1.0
    assert float(upper(0.0, 0.5)) == 5.0
