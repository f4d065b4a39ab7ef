"""Static condensation of the interior velocity unknowns.

Interior velocity test functions couple only within their own element,
so the interior rows can be solved locally: with the local blocks

    [A00 A0b] [u0 ]   [B_i^T]       [F0]
    [Ab0 Abb] [u_b] - [B_b^T] p  =  [0 ]

the map u0 = D(u_b; p) = r00 + R0b u_b + R0p p (an affine recovery map
per element) eliminates u0 and leaves a system in the interface
velocity and the pressure alone, closing a three-step procedure:

1. lift interface data to the element interior (local SPD solves),
2. read each element's boundary residual rows as a one-sided edge
   multiplier (edge mass matrices are identities),
3. sum the two sides per interior edge (the similarity).

At the true solution step 3 vanishes; the assembled interface system
below is the matching Schur complement, and solving it then applying
the recovery maps reproduces the unreduced solution.
"""

from dataclasses import dataclass

import numpy as np

from . import forms as forms_mod
from . import kernels, systems, weakcalc


@dataclass(frozen=True)
class CondensedElements:
    """Per-element condensation data (all elements, batched).

    Recovery map: u0 = r00 + R0b @ u_b + R0p @ p.
    Suu/K/Dpp and rb/rp are the condensed blocks and loads entering
    the reduced system.
    """

    lf: forms_mod.LocalForms
    F: np.ndarray
    R0b: np.ndarray
    R0p: np.ndarray
    r00: np.ndarray
    Suu: np.ndarray
    K: np.ndarray
    Dpp: np.ndarray
    rb: np.ndarray
    rp: np.ndarray

    @property
    def tables(self):
        return self.lf.tables


def condense_elements(lf, f):
    """Factorize every interior block and build the condensed blocks."""
    tables = lf.tables
    F = forms_mod.load_vector(f, tables)
    ni = 2 * tables.m_k
    R0b, R0p, r00, Suu, K, Dpp, rb, rp = kernels.condense(lf.A, lf.B, F, ni)
    return CondensedElements(
        lf=lf, F=F, R0b=R0b, R0p=R0p, r00=r00,
        Suu=Suu, K=K, Dpp=Dpp, rb=rb, rp=rp,
    )


def local_lift(cond, t, w_b, p):
    """Interior velocity on element t for interface data w_b (6d,) and
    local pressure p (m_r,): the affine recovery map."""
    return cond.r00[t] + cond.R0b[t] @ np.asarray(w_b) + cond.R0p[t] @ np.asarray(p)


def lift_all(cond, wb_loc, p):
    """Batched recovery: wb_loc (T, 6d), p (T, m_r) -> u0 (T, 2m_k)."""
    u0 = cond.r00 + np.einsum("tib,tb->ti", cond.R0b, wb_loc)
    u0 += np.einsum("tip,tp->ti", cond.R0p, p)
    return u0


def local_multiplier(lf, t, u_loc, p):
    """One-sided edge multiplier of element t, shape (3, 2, d).

    Solves c_T(v, zeta) = a_T(w_h, v) - b_T(v, p) over boundary tests
    {0, v_b}; exact because edge mass matrices are identities.
    """
    tables = lf.tables
    ni = 2 * tables.m_k
    rows = lf.A[t, ni:, :] @ np.asarray(u_loc)
    rows -= lf.B[t, :, ni:].T @ np.asarray(p)
    return rows.reshape(3, 2, tables.d_e)


def schur_operator(cond, w_b, p):
    """Similarity of the lifted multiplier: B_h x W_h -> B_h^0.

    w_b : (E, 2, d) single-valued interface data
    p : (T, m_r) pressure

    Lifts w_b into every element (using the forcing baked into `cond`),
    reads off each side's multiplier, and returns the per-edge sum of
    the two sides, zero on boundary edges, as an (E, 2, d) array.
    """
    tables = cond.tables
    mesh = tables.mesh
    T = mesh.num_elements
    wb_loc = w_b[mesh.element_edges].reshape(T, 6 * tables.d_e)
    u0 = lift_all(cond, wb_loc, p)
    u_loc = np.concatenate([u0, wb_loc], axis=1)
    zeta = forms_mod.zeta_elements(cond.lf, u_loc, p)
    sides = weakcalc.gather_sides(mesh, zeta)
    return weakcalc.similarity_all(mesh, sides)


def build_reduced(tables, lf, f, g):
    """Assemble the condensed interface/pressure system.

    Unknowns: one velocity set per edge, element pressures, and the
    mean-pressure multiplier; boundary edges fixed to Q_b g.  The
    matrix is the exact Schur complement of the interior velocity
    block of the unreduced system.
    """
    mesh = tables.mesh
    layout = systems.make_layout("schur", mesh, tables.k)
    cond = condense_elements(lf, f)
    face_map = layout.velocity_map()
    pres_map = layout.pressure_map()
    mvec = forms_mod.pressure_means(tables)

    bag = systems._TripletBag()
    bag.add_blocks(cond.Suu, face_map, face_map)
    bag.add_blocks(cond.K, face_map, pres_map)
    bag.add_blocks(np.transpose(cond.K, (0, 2, 1)), pres_map, face_map)
    bag.add_blocks(cond.Dpp, pres_map, pres_map)
    T = mesh.num_elements
    mu_col = np.full((T, 1), layout.mu_index)
    bag.add_blocks(mvec[:, :, None], pres_map, mu_col)
    bag.add_blocks(mvec[:, None, :], mu_col, pres_map)

    rhs = np.zeros(layout.total)
    np.add.at(rhs, face_map, cond.rb)
    np.add.at(rhs, pres_map, cond.rp)

    known, vals = systems._edge_projection_knowns(layout, tables, g)
    system = systems.SaddleSystem(
        matrix=bag.tocsr(layout.total), rhs=rhs, layout=layout,
        known_mask=known, known_values=vals,
    )
    return system, cond


def recover_full(system, cond, x, residual):
    """Expand a reduced solution vector into a full StokesSolution."""
    layout = system.layout
    mesh = layout.mesh
    T, E = mesh.num_elements, mesh.num_edges
    tables = cond.tables
    ub = x[: layout.off_pressure].reshape(E, 2, layout.d_e)
    p = x[layout.off_pressure : layout.off_pressure + layout.n_pressure]
    p = p.reshape(T, layout.m_r)
    mu = float(x[layout.mu_index])
    wb_loc = ub[mesh.element_edges].reshape(T, 6 * tables.d_e)
    u0 = lift_all(cond, wb_loc, p).reshape(T, 2, tables.m_k)
    sol = systems.StokesSolution(
        scheme="schur", k=layout.k, u0=u0, ub=ub,
        ub_sides=ub[mesh.element_edges], p=p, xi=None, mu=mu,
        residual=residual,
    )
    sol.xi = systems.recover_multiplier(sol, cond.lf)
    return sol


def solve_reduced(tables, lf, f, g):
    """Condense, solve the interface system, recover everything."""
    system, cond = build_reduced(tables, lf, f, g)
    x, resid = systems.solve_linear(system)
    return recover_full(system, cond, x, resid)
