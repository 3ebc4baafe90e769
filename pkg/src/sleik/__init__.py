"""Semi-Lagrangian solver for stationary eikonal-type Hamilton-Jacobi equations
with discontinuous right-hand side and degenerate anisotropic dynamics.

The library solves the Dirichlet problem

    max_{|a| <= 1} { -Du(x) . sigma(x) a } = f(x)   in a box domain,
    u = g                                           on the boundary,

by value iteration on a transformed fixed-point scheme over a uniform
rectangular grid, and ships error/convergence studies for two benchmark
problems plus a shape-from-shading pipeline on grayscale images.
"""

__version__ = "0.1.0"

from .grid import (
    Domain,
    Grid,
    NodeField,
    OutsideDomainError,
    build_grid,
    interpolate,
    locate,
    write_field_csv,
)
from .problem import (
    Benchmark,
    PiecewiseField,
    Problem,
    Region,
    RhsField,
    SigmaField,
    eikonal_problem,
    make_envelope_pair,
    test1_benchmark,
    test2_benchmark,
)
from .solver import (
    BellmanOperator,
    CflReport,
    CflViolationError,
    ControlSet,
    SolveResult,
    SolverConfig,
    apply_T,
    check_cfl,
    control_set,
    foot_point,
    inverse_kruzkov,
    kruzkov,
    solve,
)
from .analysis import (
    ErrorReport,
    StudyRow,
    StudyTable,
    convergence_study,
    error_report,
    l1_error,
    linf_error,
    order,
)
from .sfs import (
    IntensityImage,
    PgmError,
    SfsConfig,
    anisotropic_sigma,
    intensity_to_f,
    load_pgm,
    read_silhouette_csv,
    reconstruct,
    render_intensity,
    write_pgm,
)

__all__ = [
    "__version__",
    # grid
    "Domain", "Grid", "NodeField", "OutsideDomainError",
    "build_grid", "locate", "interpolate", "write_field_csv",
    # problem
    "RhsField", "SigmaField", "Problem", "Benchmark", "Region", "PiecewiseField",
    "eikonal_problem", "make_envelope_pair", "test1_benchmark", "test2_benchmark",
    # solver
    "ControlSet", "SolverConfig", "SolveResult", "CflReport", "CflViolationError",
    "BellmanOperator", "kruzkov", "inverse_kruzkov", "control_set", "foot_point",
    "apply_T", "check_cfl", "solve",
    # analysis
    "ErrorReport", "StudyRow", "StudyTable",
    "linf_error", "l1_error", "order", "error_report", "convergence_study",
    # sfs
    "IntensityImage", "PgmError", "SfsConfig",
    "load_pgm", "write_pgm", "intensity_to_f", "anisotropic_sigma",
    "reconstruct", "render_intensity", "read_silhouette_csv",
]
