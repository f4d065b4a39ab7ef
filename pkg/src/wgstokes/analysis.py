"""Manufactured solutions, error norms and convergence studies.

Errors are measured against the L2 projections of the exact fields
(not the raw fields): with e_h = Q_h u - u_h, eps_h = Q_h p - p_h and
the edge multiplier compared to Q_b(grad u . n - p n), the four
reported numbers are

    |||e_h|||        energy norm, a(e_h, e_h)^(1/2)
    ||e_h||          interior L2 norm
    ||eps_h||        pressure L2 norm
    ||Q_b l - l_h||  edge norm, (sum_{interior e} h_e |.|_e^2)^(1/2)

The triple-bar norm is evaluated through the local form matrices, so
|||v|||^2 = a(v, v) holds by construction (the stabilizer applies Q_b
to the interior trace).  Boundary edges are excluded from the
multiplier norm: boundary multipliers are identically zero by the
similarity-zero convention.
"""

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp

from . import mesh as mesh_mod
from . import polybasis, reduction, systems, weakcalc


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form (u, p) pair with synthesized forcing.

    u, f, g map points (..., 2) to vectors (..., 2); p and div_u map
    points to scalars; grad_u returns Jacobians (..., 2, 2) with entry
    [a, b] = d_b u_a.  The velocity is divergence-free and p has zero
    domain mean, so g = u on the boundary is compatible data.
    """

    cid: int
    name: str
    u: object
    p: object
    f: object
    grad_u: object
    div_u: object

    @property
    def g(self):
        """Dirichlet boundary data (the velocity trace)."""
        return self.u


def _scalar_fn(expr, x, y):
    fn = sp.lambdify((x, y), expr, modules="numpy")

    def call(pts):
        pts = np.asarray(pts, dtype=np.float64)
        val = np.asarray(fn(pts[..., 0], pts[..., 1]), dtype=np.float64)
        return np.broadcast_to(val, pts.shape[:-1])

    return call


def _vector_fn(e1, e2, x, y):
    f1, f2 = _scalar_fn(e1, x, y), _scalar_fn(e2, x, y)

    def call(pts):
        return np.stack([f1(pts), f2(pts)], axis=-1)

    return call


def _matrix_fn(rows, x, y):
    fns = [[_scalar_fn(e, x, y) for e in row] for row in rows]

    def call(pts):
        return np.stack(
            [np.stack([f(pts) for f in row], axis=-1) for row in fns],
            axis=-2,
        )

    return call


def make_case(cid):
    """Build manufactured case 1 (trigonometric velocity, biquadratic
    pressure) or case 2 (polynomial velocity and pressure)."""
    x, y = sp.symbols("x y")
    if cid == 1:
        u1 = sp.sin(2 * sp.pi * x) * sp.cos(2 * sp.pi * y)
        u2 = -sp.cos(2 * sp.pi * x) * sp.sin(2 * sp.pi * y)
        p = x**2 * y**2 - sp.Rational(1, 9)
    elif cid == 2:
        u1 = -2 * x**2 * y * (x - 1) ** 2 * (y - 1) * (2 * y - 1)
        u2 = 2 * x * y**2 * (x - 1) * (y - 1) ** 2 * (2 * x - 1)
        p = x**4 + y**4 - sp.Rational(2, 5)
    else:
        raise ValueError(f"unknown case id {cid!r}")
    f1 = sp.simplify(-sp.diff(u1, x, 2) - sp.diff(u1, y, 2) + sp.diff(p, x))
    f2 = sp.simplify(-sp.diff(u2, x, 2) - sp.diff(u2, y, 2) + sp.diff(p, y))
    grad = [[sp.diff(u1, x), sp.diff(u1, y)], [sp.diff(u2, x), sp.diff(u2, y)]]
    div = sp.simplify(sp.diff(u1, x) + sp.diff(u2, y))
    return ManufacturedCase(
        cid=cid,
        name=f"example-{cid}",
        u=_vector_fn(u1, u2, x, y),
        p=_scalar_fn(p, x, y),
        f=_vector_fn(f1, f2, x, y),
        grad_u=_matrix_fn(grad, x, y),
        div_u=_scalar_fn(div, x, y),
    )


def project_multiplier(case, tables):
    """Q_b of the exact edge multiplier grad(u).n - p n, per edge.

    Uses the T1-side outward normal, matching the sign convention of
    the solved/recovered multiplier.  Returns (E, 2, d).
    """
    mesh = tables.mesh
    t1, l1 = mesh.edge_elements[:, 0], mesh.edge_local[:, 0]
    n1 = mesh.normals[t1, l1]
    gu = case.grad_u(tables.xe_hi)
    pv = case.p(tables.xe_hi)
    lam = np.einsum("eqab,eb->eqa", gu, n1) - pv[..., None] * n1[:, None, :]
    return weakcalc.project_edge_values(lam, tables)


def error_norms(sol, case, tables, lf):
    """The four error norms of a solution against a case.

    Returns a dict with keys "triple", "l2u", "p", "lambda".
    """
    mesh = tables.mesh
    if mesh is not lf.tables.mesh:
        raise ValueError("solution/case tables refer to different meshes")
    q0u = weakcalc.project_interior(case.u, tables)
    qbu = weakcalc.project_edge(case.u, tables)
    qp = weakcalc.project_pressure(case.p, tables)
    qlam = project_multiplier(case, tables)

    e0 = q0u - sol.u0
    eb = qbu[mesh.element_edges] - sol.ub_sides
    e_loc = weakcalc.pack_local(tables, e0, eb)
    err_triple = math.sqrt(np.einsum("ti,tij,tj->", e_loc, lf.A, e_loc))
    err_l2u = math.sqrt(np.sum(e0 * e0))
    err_p = math.sqrt(np.sum((qp - sol.p) ** 2))

    xi = sol.xi if sol.xi is not None else systems.recover_multiplier(sol, lf)
    dlam = qlam - xi
    interior = ~mesh.boundary_mask
    err_lam = math.sqrt(
        np.sum(mesh.h_e[interior, None, None] * dlam[interior] ** 2)
    )
    return {"triple": err_triple, "l2u": err_l2u, "p": err_p, "lambda": err_lam}


def orders(errs):
    """log2 ratios of consecutive errors; NaN where undefined.

    The first entry is always NaN (no coarser level to compare with),
    as is any entry whose pair contains a zero error.
    """
    errs = np.asarray(errs, dtype=np.float64)
    out = np.full(errs.shape, np.nan)
    for i in range(1, len(errs)):
        if errs[i] > 0.0 and errs[i - 1] > 0.0:
            out[i] = math.log2(errs[i - 1] / errs[i])
    return out


NORM_KEYS = ("triple", "l2u", "p", "lambda")


@dataclass
class ConvergenceRecord:
    """Errors and orders per refinement level for one scheme run."""

    case_name: str
    method: str
    k: int
    ns: list
    h: np.ndarray
    errors: dict
    orders: dict

    @property
    def num_levels(self):
        return len(self.ns)


def solve_on_mesh(case, msh, k, method):
    """Assemble + solve one case on one mesh; returns (sol, tables, lf)."""
    from . import forms as forms_mod

    tables = polybasis.build_tables(msh, k)
    lf = forms_mod.assemble_local(tables)
    if method == "wg":
        sol = systems.solve(systems.assemble_wg(tables, lf, case.f, case.g))
    elif method == "hwg":
        sol = systems.solve(systems.assemble_hwg(tables, lf, case.f, case.g))
    elif method == "schur":
        sol = reduction.solve_reduced(tables, lf, case.f, case.g)
    else:
        raise ValueError(f"unknown method {method!r}")
    return sol, tables, lf


def run_convergence(case, k, levels, method="wg"):
    """Solve on uniform meshes n in `levels`; collect errors + orders."""
    if isinstance(case, int):
        case = make_case(case)
    errs = {key: [] for key in NORM_KEYS}
    for n in levels:
        msh = mesh_mod.build_uniform_square(n)
        sol, tables, lf = solve_on_mesh(case, msh, k, method)
        norms = error_norms(sol, case, tables, lf)
        for key in NORM_KEYS:
            errs[key].append(norms[key])
    errors = {key: np.array(v) for key, v in errs.items()}
    return ConvergenceRecord(
        case_name=case.name,
        method=method,
        k=k,
        ns=list(levels),
        h=1.0 / np.asarray(levels, dtype=np.float64),
        errors=errors,
        orders={key: orders(errors[key]) for key in NORM_KEYS},
    )


# ---------------------------------------------------------------------------
# discrete norms
# ---------------------------------------------------------------------------

def norm_triple(lf, u0, ub_sides):
    """|||v||| = a(v, v)^(1/2) for a weak velocity field."""
    e_loc = weakcalc.pack_local(lf.tables, u0, ub_sides)
    return math.sqrt(np.einsum("ti,tij,tj->", e_loc, lf.A, e_loc))


def norm_Vh0(lf, u0, ub_sides):
    """Nonconforming norm: |||v|||^2 + sum_int h_e^-1 ||[[v]]||_e^2."""
    mesh = lf.tables.mesh
    sides = weakcalc.gather_sides(mesh, ub_sides)
    jumps = weakcalc.jump_all(mesh, sides)
    interior = ~mesh.boundary_mask
    jump_part = np.sum(jumps[interior] ** 2 / mesh.h_e[interior, None, None])
    return math.sqrt(norm_triple(lf, u0, ub_sides) ** 2 + jump_part)


def norm_Xi(mesh, lam):
    """Multiplier norm: (sum over interior edges of h_e ||.||_e^2)^(1/2)."""
    interior = ~mesh.boundary_mask
    return math.sqrt(
        np.sum(mesh.h_e[interior, None, None] * np.asarray(lam)[interior] ** 2)
    )
