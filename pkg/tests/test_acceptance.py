"""Acceptance suite: every criterion runs at its stated tolerance and prints
one pass/fail line (run with `pytest tests/test_acceptance.py -v -s`)."""

from pathlib import Path

import numpy as np
import pytest

from sleik import (
    Domain,
    NodeField,
    RhsField,
    SfsConfig,
    SigmaField,
    SolverConfig,
    build_grid,
    control_set,
    convergence_study,
    eikonal_problem,
    inverse_kruzkov,
    kruzkov,
    l1_error,
    reconstruct,
    render_intensity,
    solve,
    test1_benchmark,
    test2_benchmark,
)
from sleik.problem import Problem
from sleik.sfs import anisotropic_sigma
from sleik.solver import BellmanOperator

# Published reference values the reproductions are held against (factor-3
# windows; the schemes differ in interpolation and control-set details).
TEST1_L1 = [8.112e-2, 3.261e-2, 1.616e-2, 7.985e-3]
TEST1_DX = [0.1, 0.05, 0.025, 0.0125]
TEST2_L1 = [0.4498, 0.2444, 0.1270, 0.0628, 0.0327]
TEST2_DX = [0.2, 0.1, 0.05, 0.025, 0.0125]

ACCEPT_CFG = SolverConfig(h=0.1, n_directions=64, tol=1e-9, cfl_policy="ignore")


def report(criterion: str, ok: bool, detail: str):
    print(f"[acceptance {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"acceptance {criterion}: {detail}"


def zero_g(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


@pytest.fixture(scope="module")
def table1():
    return convergence_study(test1_benchmark(), TEST1_DX, ACCEPT_CFG)


@pytest.fixture(scope="module")
def table2():
    return convergence_study(test2_benchmark(), TEST2_DX, ACCEPT_CFG)


def test_criterion_1_table1_reproduction(table1):
    l1 = [r.l1 for r in table1.rows]
    in_window = all(t / 3 <= v <= t * 3 for v, t in zip(l1, TEST1_L1))
    orders = [r.ord_l1 for r in table1.rows[1:]]
    last_two_ok = all(0.80 <= o <= 1.30 for o in orders[-2:])
    detail = (
        f"L1 = {['%.4e' % v for v in l1]} vs {TEST1_L1} (x3), "
        f"last two orders = {['%.4f' % o for o in orders[-2:]]} in [0.80, 1.30]"
    )
    report("1 (test1 table)", in_window and last_two_ok, detail)


def test_criterion_2_table2_reproduction(table2):
    l1 = [r.l1 for r in table2.rows]
    in_window = all(t / 3 <= v <= t * 3 for v, t in zip(l1, TEST2_L1))
    monotone = all(a > b for a, b in zip(l1, l1[1:]))
    orders = [r.ord_l1 for r in table2.rows[1:]]
    orders_ok = all(0.80 <= o <= 1.10 for o in orders)
    linf_ok = all(r.linf >= 0.5 for r in table2.rows)
    detail = (
        f"L1 = {['%.4e' % v for v in l1]} vs {TEST2_L1} (x3), decreasing, "
        f"orders rows 2-5 = {['%.4f' % o for o in orders]} in [0.80, 1.10], "
        f"Linf = {['%.4f' % r.linf for r in table2.rows]} all >= 0.5"
    )
    report("2 (test2 table)", in_window and monotone and orders_ok and linf_ok, detail)


def test_criterion_3_contraction():
    prob = eikonal_problem(Domain(0, 1, 0, 1), RhsField.constant(1.0), zero_g)
    grid = build_grid(prob.domain, 17, 17)
    b = grid.boundary_mask()
    rng = np.random.default_rng(2024)
    worst = -np.inf
    for h in (0.05, 0.1, 0.5):
        op = BellmanOperator(prob, grid, control_set(64, 2), h)
        for _ in range(100):
            w = rng.random(grid.n_nodes)
            v = rng.random(grid.n_nodes)
            v[b] = w[b]
            lhs = np.max(np.abs(op.apply(w) - op.apply(v)))
            rhs = np.max(np.abs(w - v)) / (1.0 + h)
            worst = max(worst, lhs - rhs)
    report(
        "3 (contraction)",
        worst <= 1e-14,
        f"max excess over (1/(1+h))*||W-V|| across 300 pairs = {worst:.2e} <= 1e-14",
    )


def test_criterion_4_geometric_residual_decay():
    bench = test1_benchmark()
    grid = build_grid(bench.problem.domain, 41, 41)
    result = solve(bench.problem, grid, SolverConfig(h=0.05, cfl_policy="ignore"))
    hist = result.residual_history
    n = np.arange(len(hist))
    envelope = hist[0] * (1.0 / 1.05) ** (n - 1) * 1.1
    ok = bool(np.all(hist <= envelope))
    margin = float(np.max(hist / envelope))
    report(
        "4 (residual decay)",
        ok,
        f"{len(hist)} residuals under r0*(1/(1+h))^(n-1)*1.1 (max ratio {margin:.3f})",
    )


def test_criterion_5_interpolation_invariants():
    grid = build_grid(Domain(-1, 1, 0, 2), 13, 17)
    rng = np.random.default_rng(5)
    x = rng.uniform(-1, 1, 1500)
    y = rng.uniform(0, 2, 1500)
    _, w, inside = grid.interp_stencil(x, y)
    weights_ok = (
        bool(inside.all())
        and float(w.min()) >= 0.0
        and float(w.max()) <= 1.0
        and float(np.max(np.abs(w.sum(axis=1) - 1.0))) <= 1e-12
    )

    from sleik import interpolate

    const_field = NodeField.full(grid, 2.5)
    a, bq, c = 0.3, -1.2, 0.7
    affine_field = NodeField.from_function(grid, lambda px, py: a + bq * px + c * py)
    exact_ok = True
    mono_ok = True
    for k in range(1000):
        p = (x[k], y[k])
        exact_ok &= abs(interpolate(const_field, p) - 2.5) <= 1e-13
        exact_ok &= abs(interpolate(affine_field, p) - (a + bq * p[0] + c * p[1])) <= 1e-12
        lo = rng.random(grid.n_nodes)
        hi = lo + rng.random(grid.n_nodes)
        mono_ok &= interpolate(NodeField(grid, lo), p) <= interpolate(NodeField(grid, hi), p) + 1e-15
    report(
        "5 (interpolation invariants)",
        weights_ok and exact_ok and mono_ok,
        "convex weights (1500 pts), constant/affine exactness and monotonicity (1000 cases)",
    )


def test_criterion_6_transform_round_trip():
    u = np.linspace(0.0, 20.0, 1000)
    err = float(np.max(np.abs(inverse_kruzkov(kruzkov(u)).astype(float) - u)))
    report("6 (transform round trip)", err <= 1e-10, f"max |roundtrip - u| = {err:.3e} <= 1e-10")


def test_criterion_7_distance_oracle():
    prob = eikonal_problem(Domain(-1, 1, -1, 1), RhsField.constant(1.0), zero_g)

    def dist(x, y):
        return np.minimum(1.0 - np.abs(x), 1.0 - np.abs(y))

    errors = []
    for dx in (0.05, 0.025):
        n = int(round(2.0 / dx)) + 1
        grid = build_grid(prob.domain, n, n)
        result = solve(prob, grid, SolverConfig(h=dx, cfl_policy="ignore"))
        errors.append(l1_error(result.u, dist, grid))
    ok = errors[1] < errors[0] and errors[1] <= 0.05
    report(
        "7 (distance oracle)",
        ok,
        f"L1 vs analytic distance = {errors[0]:.4f} -> {errors[1]:.4f} (<= 0.05 at dx=0.025)",
    )


def _dome(x, y):
    d = np.minimum(np.minimum(x, 2.0 - x), np.minimum(y, 2.0 - y))
    return 2.0 * d - d * d


def test_criterion_8_sfs_round_trip():
    # slope floor 0.1 keeps the dome's singular point fed on the coarse grids
    errors = []
    for n in (17, 33, 65):
        grid = build_grid(Domain(0.0, 2.0, 0.0, 2.0), n, n)
        image = render_intensity(NodeField.from_function(grid, _dome))
        result = reconstruct(image, SfsConfig(epsilon_f=0.1))
        errors.append(l1_error(result.u, _dome, grid))
    decreasing = errors[0] > errors[1] > errors[2]

    # p = 0 anisotropic dynamics vs the identity, bit for bit
    n = 17
    pitch = 2.0 / (n - 1)
    img = render_intensity(
        NodeField.from_function(build_grid(Domain(0.0, 2.0, 0.0, 2.0), n, n), _dome)
    )
    grid = build_grid(img.grid_domain(), n, n)
    from sleik import intensity_to_f
    from sleik.sfs import _nearest_pixel_lookup

    f = RhsField(
        _nearest_pixel_lookup(intensity_to_f(img.node_values(), 1e-2), pitch), rho=1e-2
    )
    pa = Problem(domain=grid.domain, f=f, sigma=anisotropic_sigma(img, 0.0), g=zero_g)
    pi = Problem(domain=grid.domain, f=f, sigma=SigmaField.identity(), g=zero_g)
    cfg = SolverConfig(h=pitch)
    bitwise = np.array_equal(solve(pa, grid, cfg).u.values, solve(pi, grid, cfg).u.values)
    report(
        "8 (sfs round trip)",
        decreasing and bitwise,
        f"render->reconstruct L1 = {['%.4f' % e for e in errors]} strictly decreasing; "
        f"p=0 bit-identical to identity: {bitwise}",
    )


def test_criterion_9_external_tables_documented_not_asserted():
    readme = (Path(__file__).resolve().parents[1] / "README.md").read_text(encoding="utf-8")
    documented = "DF-reg" in readme and "0.3062" in readme
    report(
        "9 (out-of-scope tables documented)",
        documented,
        "finite-difference comparison and case-study accuracy tables are quoted "
        "in README.md as documentation only",
    )
