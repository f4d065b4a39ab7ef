"""Weak Galerkin solvers for the stationary Stokes problem.

Three equivalent routes to the same discrete solution on triangulated
unit-square domains:

  wg     velocity-pressure saddle system with weak functions,
  hwg    hybridized variant with edge Lagrange multipliers,
  schur  element-wise condensation to an edge + pressure system.

See the README for the coefficient conventions and the CLI.
"""

from .analysis import (
    ConvergenceRecord,
    ManufacturedCase,
    error_norms,
    make_case,
    orders,
    run_convergence,
    solve_on_mesh,
)
from .forms import LocalForms, assemble_local, form_a, form_b, form_c
from .kernels import lane
from .mesh import TriMesh, build_uniform_square, read_mesh
from .polybasis import MeshTables, build_tables, triangle_quadrature
from .reduction import condense_elements, schur_operator, solve_reduced
from .systems import (
    SingularSystemError,
    StokesSolution,
    assemble_hwg,
    assemble_wg,
    make_layout,
    recover_multiplier,
    solve,
    solve_linear,
)
from .weakcalc import (
    build_weak_maps,
    jump,
    project_edge,
    project_interior,
    project_pressure,
    similarity,
    weak_divergence,
    weak_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceRecord",
    "LocalForms",
    "ManufacturedCase",
    "MeshTables",
    "SingularSystemError",
    "StokesSolution",
    "TriMesh",
    "assemble_hwg",
    "assemble_local",
    "assemble_wg",
    "build_tables",
    "build_uniform_square",
    "build_weak_maps",
    "condense_elements",
    "error_norms",
    "form_a",
    "form_b",
    "form_c",
    "jump",
    "lane",
    "make_case",
    "make_layout",
    "orders",
    "project_edge",
    "project_interior",
    "project_pressure",
    "read_mesh",
    "recover_multiplier",
    "run_convergence",
    "schur_operator",
    "similarity",
    "solve",
    "solve_linear",
    "solve_on_mesh",
    "solve_reduced",
    "triangle_quadrature",
    "weak_divergence",
    "weak_gradient",
    "__version__",
]
