"""Front propagation through a medium whose speed jumps across an interface.

The test1 benchmark solves |Du| = f on (-1,1) x (0,2) with f = 1 for x < 0 and
f = 1/2 for x > 0 (3/4 on the interface itself).  Level sets of u are arrival
times of a front entering from the boundary; the jump in f refracts them at
x = 0, yet the solution stays continuous and both error norms shrink at first
order under grid refinement.
"""

from pathlib import Path

import numpy as np

from sleik import SolverConfig, build_grid, convergence_study, solve, test1_benchmark

OUT = Path(__file__).resolve().parent / "demo_out"
OUT.mkdir(exist_ok=True)

bench = test1_benchmark()
config = SolverConfig(h=0.1, n_directions=64, tol=1e-9, cfl_policy="ignore")

print("Refinement study (dx = h, 64 directions):")
table = convergence_study(bench, [0.1, 0.05, 0.025, 0.0125], config)
print(table.to_text())
(OUT / "front_propagation_study.csv").write_text(table.to_csv())

print("Orders settle near 1 in both norms: the scheme is first-order even")
print("though the right-hand side jumps across x = 0.\n")

grid = build_grid(bench.problem.domain, 81, 81)
result = solve(bench.problem, grid, SolverConfig(h=grid.dx, cfl_policy="ignore"))
u = result.u.matrix()
x, y = grid.node_coords()
err = np.abs(result.u.values - bench.exact_u(x, y))
print(f"81 x 81 solve: {result.iterations} sweeps, max error {err.max():.3e},")
print("largest errors concentrate along the refraction wedge between the")
print(f"interface x = 0 and the line x = -y/sqrt(3) (mean error {err.mean():.3e}).")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    cs = axes[0].contour(grid.xs, grid.ys, u, levels=15)
    axes[0].clabel(cs, inline=True, fontsize=7)
    axes[0].axvline(0.0, color="k", lw=0.8, ls="--")
    axes[0].set_title("arrival-time level sets (interface dashed)")
    im = axes[1].imshow(
        err.reshape(grid.ny, grid.nx), origin="lower",
        extent=(-1, 1, 0, 2), aspect="auto",
    )
    fig.colorbar(im, ax=axes[1])
    axes[1].set_title("pointwise error vs exact solution")
    fig.tight_layout()
    fig.savefig(OUT / "front_propagation.png", dpi=130)
    print(f"\nwrote {OUT / 'front_propagation.png'}")
except ImportError:
    print("\nmatplotlib not installed; skipping the figure")
