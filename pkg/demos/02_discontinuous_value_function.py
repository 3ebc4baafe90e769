"""A control problem whose value function is genuinely discontinuous.

The test2 benchmark solves x^2 u_x^2 + u_y^2 = f^2 on (-1,1)^2 with zero
boundary data, f = 2 for x > 0 and 1 for x <= 0.  The dynamics matrix
diag(x, 1) degenerates on the line x = 0: trajectories can approach it but
never cross, so the value function jumps there, roughly from (1-|y|) on the
left to 2(1-|y|) on the right.

No scheme can converge to a discontinuous function in the uniform norm; the
point of this experiment is that the integral-norm error still decreases at
first order, which is exactly what the refinement table shows.
"""

from pathlib import Path

import numpy as np

from sleik import SolverConfig, build_grid, convergence_study, solve, test2_benchmark

OUT = Path(__file__).resolve().parent / "demo_out"
OUT.mkdir(exist_ok=True)

bench = test2_benchmark()
config = SolverConfig(h=0.1, n_directions=64, tol=1e-9, cfl_policy="ignore")

table = convergence_study(bench, [0.2, 0.1, 0.05, 0.025, 0.0125], config)
print(table.to_text())
(OUT / "discontinuous_value_study.csv").write_text(table.to_csv())

print("The max error is pinned near 1 by the jump across x = 0 (uniform-norm")
print("convergence fails by design), while the L1 error keeps halving.\n")

grid = build_grid(bench.problem.domain, 161, 161)
result = solve(bench.problem, grid, SolverConfig(h=grid.dx, cfl_policy="ignore"))
u = result.u.matrix()
mid = grid.ny // 2
print("mid-row slice u(x, 0) around the degeneracy line:")
sel = slice(grid.nx // 2 - 3, grid.nx // 2 + 4)
for xi, ui in zip(grid.xs[sel], u[mid, sel]):
    print(f"  x = {xi:+.4f}   u = {ui:.4f}")
print("the discrete solution sits at the left limit on the line itself;")
print("its exact counterpart there is the limit from the right, 2(1-|y|).")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    im = axes[0].imshow(u, origin="lower", extent=(-1, 1, -1, 1))
    fig.colorbar(im, ax=axes[0])
    axes[0].set_title("discrete value function (161 x 161)")
    axes[1].plot(grid.xs, u[mid, :], label="computed u(x, 0)")
    xs = np.linspace(-1, 1, 801)
    axes[1].plot(xs, bench.exact_u(xs, np.zeros_like(xs)), "--", label="exact")
    axes[1].legend()
    axes[1].set_title("slice y = 0: the jump across the degeneracy line")
    fig.tight_layout()
    fig.savefig(OUT / "discontinuous_value.png", dpi=130)
    print(f"\nwrote {OUT / 'discontinuous_value.png'}")
except ImportError:
    print("\nmatplotlib not installed; skipping the figure")
