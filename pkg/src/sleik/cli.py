"""Command-line entry point: reproducible solves, refinement studies, and
shape-from-shading runs driven by flags and/or a flat key=value config file.

Flags override config-file keys; the output directory resolves as
--out > config `out` > $SLEIK_OUT > ./sleik_out.  Every run writes a
metadata file echoing the full effective configuration (there is no
randomness anywhere, so the echo suffices to replay a run bit-identically).
Numeric artifacts are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import convergence_study, error_report
from .grid import Domain, build_grid, write_field_csv
from .problem import (
    PiecewiseField,
    Problem,
    Region,
    RhsField,
    SigmaField,
    constant_fn,
    make_envelope_pair,
    test1_benchmark,
    test2_benchmark,
)
from .sfs import EPS_I_DEFAULT, PgmError, SfsConfig, load_pgm, read_silhouette_csv, reconstruct
from .solver import CflViolationError, SolverConfig, solve

__all__ = ["main", "run_solve", "run_study", "run_sfs", "RunConfig", "ConfigError"]

ENV_OUT = "SLEIK_OUT"
DEFAULT_OUT = "sleik_out"

BENCHMARKS = {"test1": test1_benchmark, "test2": test2_benchmark}


class ConfigError(ValueError):
    """One or more configuration problems; the message lists all of them."""

    def __init__(self, problems: list[str]):
        super().__init__("configuration errors:\n  - " + "\n  - ".join(problems))
        self.problems = problems


@dataclass
class RunConfig:
    """Effective configuration of one run after merging flags and config file."""

    command: str
    out_dir: Path
    benchmark: str | None = None
    problem_spec: dict = field(default_factory=dict)
    resolutions: list[float] = field(default_factory=list)
    solver: SolverConfig | None = None
    image: str | None = None
    sfs: SfsConfig | None = None
    pitch: float = 1.0
    eps_i: float = EPS_I_DEFAULT
    echo: dict = field(default_factory=dict)


# -- config file and merging --------------------------------------------------


def parse_config_file(path) -> dict:
    """Flat `key = value` file; `#` lines are comments; repeated keys accumulate."""
    out: dict = {}
    problems: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                problems.append(f"{path}:{ln}: expected key = value, got {line!r}")
                continue
            key, value = line.split("=", 1)
            key, value = key.strip(), value.strip()
            if key in out:
                prev = out[key]
                out[key] = (prev if isinstance(prev, list) else [prev]) + [value]
            else:
                out[key] = value
    if problems:
        raise ConfigError(problems)
    return out


def _merged(args: argparse.Namespace, key: str, conf: dict, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    return conf.get(key, default)


def _to_float(value, key: str, problems: list[str]):
    try:
        return float(value)
    except (TypeError, ValueError):
        problems.append(f"{key}: expected a number, got {value!r}")
        return None


def _to_int(value, key: str, problems: list[str]):
    try:
        return int(value)
    except (TypeError, ValueError):
        problems.append(f"{key}: expected an integer, got {value!r}")
        return None


def _to_float_list(value, key: str, problems: list[str]) -> list[float]:
    if value is None:
        return []
    if isinstance(value, (int, float)):
        return [float(value)]
    try:
        return [float(tok) for tok in str(value).split(",") if tok.strip()]
    except ValueError:
        problems.append(f"{key}: expected comma-separated numbers, got {value!r}")
        return []


# -- custom problem construction ----------------------------------------------

_EXPR_NAMES = {
    "abs": np.abs,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "where": np.where,
    "pi": np.pi,
}


def _expression_fn(expr: str, key: str, problems: list[str]):
    """Compile a restricted numpy expression of x and y."""
    try:
        code = compile(expr, f"<{key}>", "eval")
    except SyntaxError as e:
        problems.append(f"{key}: syntax error in {expr!r}: {e.msg}")
        return None
    for name in code.co_names:
        if name not in _EXPR_NAMES and name not in ("x", "y"):
            problems.append(f"{key}: name {name!r} is not allowed in expressions")
            return None

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ns = dict(_EXPR_NAMES)
        ns["x"], ns["y"] = x, y
        out = eval(code, {"__builtins__": {}}, ns)  # names whitelisted above
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x, y).shape)

    return fn


def build_problem(spec: dict, problems: list[str]):
    """Problem from a custom-problem key set; piecewise-constant f over boxes.

    f takes the value of the first listed region (closed box) containing the
    point, else f_default; rho is the minimum of all constants.
    """
    box = _to_float_list(spec.get("domain"), "domain", problems)
    if len(box) != 4:
        problems.append("domain: custom problems need `domain = x0,x1,y0,y1`")
        return None
    try:
        domain = Domain(*box)
    except ValueError as e:
        problems.append(str(e))
        return None

    f_default = _to_float(spec.get("f_default", 1.0), "f_default", problems)
    raw_regions = spec.get("f_region", [])
    if isinstance(raw_regions, str):
        raw_regions = [raw_regions]
    region_boxes: list[tuple] = []
    for k, raw in enumerate(raw_regions):
        parts = _to_float_list(raw, f"f_region[{k}]", problems)
        if len(parts) != 5:
            problems.append(f"f_region[{k}]: expected x0,x1,y0,y1,value, got {raw!r}")
            continue
        region_boxes.append(tuple(parts))
    if f_default is None or f_default <= 0 or any(rb[4] <= 0 for rb in region_boxes):
        problems.append("f: all constants must be positive")
        return None

    def f_fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, f_default)
        taken = np.zeros(out.shape, dtype=bool)
        for x0, x1, y0, y1, val in region_boxes:
            m = (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1) & ~taken
            out = np.where(m, val, out)
            taken |= m
        return out

    rho = min([f_default] + [rb[4] for rb in region_boxes])
    regions = tuple(
        Region(x0, x1, y0, y1, constant_fn(val)) for x0, x1, y0, y1, val in region_boxes
    ) + (Region(-np.inf, np.inf, -np.inf, np.inf, constant_fn(f_default)),)
    lower, upper = make_envelope_pair(PiecewiseField(f_fn, regions), domain)
    f = RhsField(f_fn, rho=rho, lower=lower, upper=upper)

    g_edges = spec.get("g_edges")
    if g_edges is not None:
        parts = _to_float_list(g_edges, "g_edges", problems)
        if len(parts) != 4:
            problems.append(f"g_edges: expected left,right,bottom,top, got {g_edges!r}")
            return None
        gl, gr, gb, gt = parts

        def g(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            out = np.full(np.broadcast(x, y).shape, gr)
            out = np.where(x == domain.xmin, gl, out)
            out = np.where(y == domain.ymax, gt, out)
            out = np.where(y == domain.ymin, gb, out)
            return out

    else:
        g_const = _to_float(spec.get("g", 0.0), "g", problems)
        if g_const is None:
            return None
        g = constant_fn(g_const)

    sigma_spec = str(spec.get("sigma", "identity"))
    if sigma_spec == "identity":
        sigma = SigmaField.identity()
    elif sigma_spec == "diag_x_1":
        m_sigma = max(abs(domain.xmin), abs(domain.xmax), 1.0)
        sigma = SigmaField.diagonal(
            lambda x, y: np.asarray(x, dtype=float) + 0.0 * np.asarray(y), 1.0, m_sigma
        )
    elif sigma_spec.startswith("diag:"):
        entries = sigma_spec[len("diag:"):].split(";")
        if len(entries) != 2:
            problems.append(f"sigma: expected diag:expr1;expr2, got {sigma_spec!r}")
            return None
        f11 = _expression_fn(entries[0], "sigma[1,1]", problems)
        f22 = _expression_fn(entries[1], "sigma[2,2]", problems)
        if f11 is None or f22 is None:
            return None
        # Declared bound from a dense sample; the solver re-checks it on the
        # actual grid nodes.
        sx = np.linspace(domain.xmin, domain.xmax, 201)
        sy = np.linspace(domain.ymin, domain.ymax, 201)
        SX, SY = np.meshgrid(sx, sy)
        m_sigma = float(np.maximum(np.abs(f11(SX, SY)), np.abs(f22(SX, SY))).max())
        if not np.isfinite(m_sigma) or m_sigma <= 0:
            problems.append("sigma: custom diagonal must be finite and not identically zero")
            return None
        sigma = SigmaField.diagonal(f11, f22, m_sigma * (1.0 + 1e-12))
    else:
        problems.append(
            f"sigma: unknown choice {sigma_spec!r} (identity | diag_x_1 | diag:expr;expr)"
        )
        return None

    return Problem(domain=domain, f=f, sigma=sigma, g=g)


# -- artifact writing ---------------------------------------------------------


def _write_metadata(path: Path, entries: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")


def _write_residuals(path: Path, history: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,residual\n")
        for n, r in enumerate(history, start=1):
            fh.write(f"{n},{r:.17g}\n")


def _base_metadata(cfg: RunConfig) -> dict:
    import scipy

    meta = {
        "command": cfg.command,
        "sleik_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "python_version": sys.version.split()[0],
        "randomness": "none (deterministic)",
    }
    meta.update(cfg.echo)
    return meta


def _grid_for(domain: Domain, dx: float, problems: list[str]):
    nx = domain.width / dx
    ny = domain.height / dx
    if abs(nx - round(nx)) > 1e-9 * max(1.0, nx) or abs(ny - round(ny)) > 1e-9 * max(1.0, ny):
        problems.append(f"dx = {dx} does not divide the domain evenly")
        return None
    return build_grid(domain, int(round(nx)) + 1, int(round(ny)) + 1)


# -- commands -----------------------------------------------------------------


def _resolve_problem(cfg: RunConfig, problems: list[str]):
    if cfg.benchmark is not None:
        if cfg.benchmark not in BENCHMARKS:
            problems.append(
                f"unknown benchmark {cfg.benchmark!r} (have: {', '.join(sorted(BENCHMARKS))})"
            )
            return None, None
        bench = BENCHMARKS[cfg.benchmark]()
        return bench.problem, bench
    if cfg.problem_spec:
        return build_problem(cfg.problem_spec, problems), None
    problems.append("no problem given: use --benchmark or a custom problem spec")
    return None, None


def run_solve(cfg: RunConfig) -> int:
    problems: list[str] = []
    problem, bench = _resolve_problem(cfg, problems)
    if len(cfg.resolutions) != 1:
        problems.append("solve needs exactly one --dx value")
    if problems or problem is None:
        raise ConfigError(problems or ["could not build the problem"])
    grid = _grid_for(problem.domain, cfg.resolutions[0], problems)
    if problems:
        raise ConfigError(problems)

    result = solve(problem, grid, cfg.solver)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_field_csv(result.u, cfg.out_dir / "solution.csv")
    _write_residuals(cfg.out_dir / "residuals.csv", result.residual_history)

    meta = _base_metadata(cfg)
    meta.update(
        iterations=result.iterations,
        converged=result.converged,
        final_residual=f"{result.residual_history[-1]:.17g}" if result.iterations else "nan",
        clamped_nodes=result.clamped_nodes.size,
        cfl_h_over_dx=f"{result.cfl.h_over_dx:.17g}",
        cfl_bound=f"{result.cfl.rho_over_m_sigma:.17g}",
        cfl_satisfied=result.cfl.satisfied,
    )
    _write_metadata(cfg.out_dir / "metadata.txt", meta)

    if bench is not None:
        rep = error_report(result.u, bench.exact_u, cfg.solver.h)
        with open(cfg.out_dir / "errors.csv", "w", encoding="utf-8") as fh:
            fh.write("dx,h,linf,l1\n")
            fh.write(f"{rep.dx:.17g},{rep.h:.17g},{rep.linf:.17g},{rep.l1:.17g}\n")
        print(f"errors vs exact: max {rep.linf:.5e}, L1 {rep.l1:.5e}")

    print(
        f"solve: {grid.nx} x {grid.ny} nodes, {result.iterations} sweeps, "
        f"{'converged' if result.converged else 'NOT converged'}"
    )
    return 0 if result.converged else 1


def run_study(cfg: RunConfig) -> int:
    problems: list[str] = []
    if cfg.benchmark is None:
        problems.append("study needs --benchmark (errors require an exact solution)")
    if not cfg.resolutions:
        problems.append("study needs --dx as a comma-separated, halving list")
    if problems:
        raise ConfigError(problems)
    _, bench = _resolve_problem(cfg, problems)
    if problems or bench is None:
        raise ConfigError(problems or ["could not resolve the benchmark"])

    table = convergence_study(bench, cfg.resolutions, cfg.solver)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "study.csv").write_text(table.to_csv(), encoding="utf-8")
    text = table.to_text()
    (cfg.out_dir / "study.txt").write_text(text, encoding="utf-8")
    _write_metadata(cfg.out_dir / "metadata.txt", _base_metadata(cfg))
    print(text, end="")
    return 0 if all(r.converged for r in table.rows) else 1


def run_sfs(cfg: RunConfig) -> int:
    if cfg.image is None:
        raise ConfigError(["sfs needs --image pointing to a PGM file"])
    image = load_pgm(cfg.image, eps_i=cfg.eps_i, pitch=cfg.pitch)
    result = reconstruct(image, cfg.sfs)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    surface = result.u
    x, y = surface.grid.node_coords()
    data = np.column_stack([x, y, surface.values])
    np.savetxt(
        cfg.out_dir / "surface.csv", data, fmt="%.17g", delimiter=",", header="x,y,u", comments=""
    )
    _write_residuals(cfg.out_dir / "residuals.csv", result.residual_history)
    meta = _base_metadata(cfg)
    meta.update(
        image_width=image.width,
        image_height=image.height,
        clamped_pixels=image.clamped,
        clamped_nodes=result.clamped_nodes.size,
        iterations=result.iterations,
        converged=result.converged,
    )
    _write_metadata(cfg.out_dir / "metadata.txt", meta)
    print(
        f"sfs: {image.width} x {image.height} image, {result.iterations} sweeps, "
        f"{'converged' if result.converged else 'NOT converged'}"
    )
    return 0 if result.converged else 1


# -- argument parsing ---------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser, sfs: bool = False):
    sub.add_argument("--config", help="flat key=value config file; flags override it")
    sub.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./{DEFAULT_OUT})")
    sub.add_argument("--h", type=float, help="pseudo-time step (default: dx)")
    sub.add_argument("--na", type=int, help="number of unit-circle control directions (default 64)")
    sub.add_argument("--tol", type=float, help="max-norm stopping tolerance (default 1e-9)")
    sub.add_argument("--max-iter", type=int, dest="max_iter", help="iteration cap")
    sub.add_argument(
        "--cfl", choices=("enforce", "warn", "ignore"), help="step-ratio policy (default warn)"
    )
    if not sfs:
        sub.add_argument("--benchmark", help="built-in problem name (test1 | test2)")
        sub.add_argument("--dx", help="mesh size; a comma-separated halving list for study")
        sub.add_argument("--domain", help="custom problem box: x0,x1,y0,y1")
        sub.add_argument("--f-default", dest="f_default", help="background value of f")
        sub.add_argument(
            "--f-region",
            dest="f_region",
            action="append",
            help="x0,x1,y0,y1,value; repeatable, first match wins",
        )
        sub.add_argument("--g", help="constant boundary value")
        sub.add_argument(
            "--g-edges", dest="g_edges", help="per-edge boundary values: left,right,bottom,top"
        )
        sub.add_argument("--sigma", help="identity | diag_x_1 | diag:expr;expr")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sleik",
        description="Semi-Lagrangian solver for eikonal-type equations with "
        "discontinuous right-hand side.",
    )
    parser.add_argument("--version", action="version", version=f"sleik {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("solve", help="single solve: solution + residuals + metadata")
    _add_common(sub)
    sub = subparsers.add_parser("study", help="refinement study over a halving dx list")
    _add_common(sub)
    sub = subparsers.add_parser("sfs", help="surface reconstruction from a PGM image")
    _add_common(sub, sfs=True)
    sub.add_argument("--image", help="input PGM (P2 or P5)")
    sub.add_argument("--p", type=float, help="anisotropy exponent (default 0: isotropic)")
    sub.add_argument("--epsilon-f", dest="epsilon_f", type=float, help="slope floor (default 1e-2)")
    sub.add_argument(
        "--epsilon-i", dest="epsilon_i", type=float, help="brightness floor (default 1e-3)"
    )
    sub.add_argument("--pitch", type=float, help="pixel pitch = grid spacing (default 1.0)")
    sub.add_argument("--boundary", choices=("zero", "silhouette"), help="boundary mode")
    sub.add_argument("--silhouette", help="CSV i,j,height covering every boundary pixel")
    return parser


def _assemble(args: argparse.Namespace) -> RunConfig:
    problems: list[str] = []
    conf: dict = {}
    if args.config:
        if not Path(args.config).exists():
            raise ConfigError([f"config file {args.config!r} does not exist"])
        conf = parse_config_file(args.config)

    out = _merged(args, "out", conf) or os.environ.get(ENV_OUT) or DEFAULT_OUT
    cfg = RunConfig(command=args.command, out_dir=Path(out))

    resolutions = _to_float_list(_merged(args, "dx", conf), "dx", problems)
    pitch = None
    if args.command == "sfs":
        pitch = _to_float(_merged(args, "pitch", conf, 1.0), "pitch", problems)
    h = _merged(args, "h", conf)
    if h is not None:
        h = _to_float(h, "h", problems)
    elif resolutions:
        h = resolutions[0]
    elif pitch is not None:
        h = pitch
    na = _to_int(_merged(args, "na", conf, 64), "na", problems)
    tol = _to_float(_merged(args, "tol", conf, 1e-9), "tol", problems)
    max_iter = _merged(args, "max_iter", conf)
    if max_iter is not None:
        max_iter = _to_int(max_iter, "max_iter", problems)
    cfl = str(_merged(args, "cfl", conf, "warn"))

    if h is None:
        problems.append("no pseudo-time step: give --h or --dx")
    elif None not in (na, tol):
        try:
            cfg.solver = SolverConfig(h=h, n_directions=na, tol=tol, max_iter=max_iter, cfl_policy=cfl)
        except ValueError as e:
            problems.append(str(e))

    cfg.resolutions = resolutions
    echo = {"h": h, "na": na, "tol": tol, "max_iter": max_iter, "cfl_policy": cfl, "out": str(out)}

    if args.command in ("solve", "study"):
        cfg.benchmark = _merged(args, "benchmark", conf)
        spec_keys = ("domain", "f_default", "f_region", "g", "g_edges", "sigma")
        spec = {k: _merged(args, k, conf) for k in spec_keys}
        cfg.problem_spec = {k: v for k, v in spec.items() if v is not None}
        if cfg.benchmark is None and not cfg.problem_spec:
            problems.append("no problem given: use --benchmark or a custom problem spec")
        if not resolutions:
            problems.append("no mesh size given: use --dx")
        echo["benchmark"] = cfg.benchmark
        echo["dx"] = ",".join(f"{r:g}" for r in resolutions)
        echo.update(cfg.problem_spec)
    else:
        cfg.image = _merged(args, "image", conf)
        if cfg.image is None:
            problems.append("sfs needs --image")
        cfg.pitch = pitch if pitch is not None else 1.0
        eps_i = _to_float(_merged(args, "epsilon_i", conf, EPS_I_DEFAULT), "epsilon_i", problems)
        cfg.eps_i = eps_i if eps_i is not None else EPS_I_DEFAULT
        p = _to_float(_merged(args, "p", conf, 0.0), "p", problems)
        epsilon_f = _to_float(_merged(args, "epsilon_f", conf, 1e-2), "epsilon_f", problems)
        boundary = str(_merged(args, "boundary", conf, "zero"))
        silhouette_path = _merged(args, "silhouette", conf)
        silhouette = None
        if boundary == "silhouette":
            if silhouette_path is None:
                problems.append("silhouette boundary mode needs --silhouette FILE")
            elif not Path(silhouette_path).exists():
                problems.append(f"silhouette file {silhouette_path!r} does not exist")
            else:
                try:
                    silhouette = read_silhouette_csv(silhouette_path)
                except ValueError as e:
                    problems.append(str(e))
        if not problems and cfg.solver is not None:
            try:
                cfg.sfs = SfsConfig(
                    epsilon_f=epsilon_f,
                    p=p,
                    boundary_mode=boundary,
                    silhouette=silhouette,
                    solver=cfg.solver,
                )
            except ValueError as e:
                problems.append(str(e))
        echo.update(
            image=cfg.image, p=p, epsilon_f=epsilon_f, epsilon_i=cfg.eps_i,
            pitch=cfg.pitch, boundary=boundary, silhouette=silhouette_path,
        )

    cfg.echo = {k: v for k, v in echo.items() if v is not None}
    if problems:
        raise ConfigError(problems)
    return cfg


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = _assemble(args)
        if args.command == "solve":
            return run_solve(cfg)
        if args.command == "study":
            return run_study(cfg)
        return run_sfs(cfg)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        print(f"run `sleik {args.command} --help` for the full flag list", file=sys.stderr)
        return 2
    except PgmError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except CflViolationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
