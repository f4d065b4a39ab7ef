"""Global saddle-point systems: assembly, boundary data, direct solve.

Two schemes share this module.  The conforming scheme ("wg") keeps one
velocity unknown set per edge (single-valued interface data).  The
hybridized scheme ("hwg") gives every element its own copy of the edge
unknowns and enforces agreement weakly through an edge multiplier
field; the multiplier lives in the similarity-zero subspace, realized
as ONE signed unknown per edge component: the T1 side sees +xi, the T2
side sees -xi, and boundary-edge multipliers are identically zero.

Both systems are assembled structurally symmetric:

    [ A   -B^T  (-C^T)  0 ] [u  ]   [F]
    [-B    0            m ] [p  ] = [0]
    [(-C)  0     0      0 ] [xi ]   [0]
    [ 0    m^T   0      0 ] [mu ]   [0]

with one bordering row/column m enforcing the zero-mean pressure
constraint.  Dirichlet data enters by symmetric elimination: boundary
edge unknowns are set to the edge projection of g and their columns
move to the right-hand side.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import forms as forms_mod
from . import weakcalc

SOLVE_RTOL = 1e-10
PIVOT_RTOL = 1e-12


class SingularSystemError(RuntimeError):
    """Factorization found a (near-)zero pivot; message names the DOF."""


@dataclass(frozen=True)
class DofLayout:
    """Global index map for one scheme's unknown vector.

    Unknown vector order: interior velocity (element-major, x block
    then y block), then interface velocity (edge blocks for "wg" /
    "schur", per-element sides for "hwg"), then element pressures,
    then ("hwg" only) edge multipliers, then the single mean-pressure
    multiplier.  The "schur" layout has no interior block.
    """

    scheme: str
    mesh: object
    k: int
    m_k: int
    m_r: int
    d_e: int
    n_interior: int
    n_face: int
    n_pressure: int
    n_xi: int
    off_face: int
    off_pressure: int
    off_xi: int
    mu_index: int

    @property
    def total(self):
        return self.mu_index + 1

    @property
    def n_loc(self):
        return 2 * self.m_k + 6 * self.d_e

    def edge_dofs(self, e):
        """Interface velocity DOFs of edge e ("wg"/"schur" layouts)."""
        base = self.off_face + e * 2 * self.d_e
        return np.arange(base, base + 2 * self.d_e)

    def side_dofs(self, t, le):
        """Interface velocity DOFs of side (t, le) ("hwg" layout)."""
        base = self.off_face + (t * 3 + le) * 2 * self.d_e
        return np.arange(base, base + 2 * self.d_e)

    def pressure_dofs(self, t):
        base = self.off_pressure + t * self.m_r
        return np.arange(base, base + self.m_r)

    def xi_dofs(self, e):
        base = self.off_xi + e * 2 * self.d_e
        return np.arange(base, base + 2 * self.d_e)

    def velocity_map(self):
        """(T, n_loc) global DOFs of each element's local velocity
        vector, or (T, 6d) of its edge blocks for the "schur" layout."""
        mesh = self.mesh
        T = mesh.num_elements
        two_d = 2 * self.d_e
        if self.scheme == "hwg":
            face = self.off_face + (
                (np.arange(T)[:, None] * 3 + np.arange(3)) * two_d
            )
        else:
            face = self.off_face + mesh.element_edges * two_d
        face = face[:, :, None] + np.arange(two_d)
        face = face.reshape(T, 6 * self.d_e)
        if self.scheme == "schur":
            return face
        interior = (
            np.arange(T)[:, None] * 2 * self.m_k + np.arange(2 * self.m_k)
        )
        return np.concatenate([interior, face], axis=1)

    def pressure_map(self):
        T = self.mesh.num_elements
        return self.off_pressure + (
            np.arange(T)[:, None] * self.m_r + np.arange(self.m_r)
        )

    def describe(self, g):
        """Human-readable identity of global DOF g (solver reports)."""
        if g == self.mu_index:
            return "mean-pressure constraint"
        if self.off_xi <= g < self.off_xi + self.n_xi:
            r = g - self.off_xi
            e, r = divmod(r, 2 * self.d_e)
            comp, mode = divmod(r, self.d_e)
            return f"multiplier edge {e} comp {'xy'[comp]} mode {mode}"
        if self.off_pressure <= g < self.off_pressure + self.n_pressure:
            t, mode = divmod(g - self.off_pressure, self.m_r)
            return f"pressure element {t} mode {mode}"
        if g >= self.off_face:
            r = g - self.off_face
            blk, r = divmod(r, 2 * self.d_e)
            comp, mode = divmod(r, self.d_e)
            if self.scheme == "hwg":
                t, le = divmod(blk, 3)
                return (
                    f"side velocity element {t} local edge {le} "
                    f"comp {'xy'[comp]} mode {mode}"
                )
            return f"edge velocity edge {blk} comp {'xy'[comp]} mode {mode}"
        t, r = divmod(g, 2 * self.m_k)
        comp, mode = divmod(r, self.m_k)
        return f"interior velocity element {t} comp {'xy'[comp]} mode {mode}"


def make_layout(scheme, mesh, k):
    m_k = (k + 1) * (k + 2) // 2
    m_r = k * (k + 1) // 2
    d_e = k
    T, E = mesh.num_elements, mesh.num_edges
    n_interior = 0 if scheme == "schur" else 2 * m_k * T
    n_face = 6 * d_e * T if scheme == "hwg" else 2 * d_e * E
    n_pressure = m_r * T
    n_xi = 2 * d_e * E if scheme == "hwg" else 0
    off_face = n_interior
    off_pressure = off_face + n_face
    off_xi = off_pressure + n_pressure
    mu_index = off_xi + n_xi
    return DofLayout(
        scheme=scheme, mesh=mesh, k=k, m_k=m_k, m_r=m_r, d_e=d_e,
        n_interior=n_interior, n_face=n_face, n_pressure=n_pressure,
        n_xi=n_xi, off_face=off_face, off_pressure=off_pressure,
        off_xi=off_xi, mu_index=mu_index,
    )


@dataclass
class SaddleSystem:
    """Assembled sparse system plus boundary data for elimination."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    layout: DofLayout
    known_mask: np.ndarray
    known_values: np.ndarray


@dataclass
class StokesSolution:
    """Velocity/pressure (and optionally multiplier) coefficients.

    u0 : (T, 2, m_k) interior velocity
    ub : (E, 2, d) interface velocity (T1-side values for "hwg")
    ub_sides : (T, 3, 2, d) interface velocity seen from each element
    p : (T, m_r) pressure
    xi : (E, 2, d) multiplier (T1-side sign convention) or None
    mu : mean-pressure Lagrange multiplier
    residual : relative linear-solve residual
    """

    scheme: str
    k: int
    u0: np.ndarray
    ub: np.ndarray
    ub_sides: np.ndarray
    p: np.ndarray
    xi: object
    mu: float
    residual: float


class _TripletBag:
    def __init__(self):
        self.data = []
        self.rows = []
        self.cols = []

    def add_blocks(self, blocks, rows, cols):
        """Scatter dense (N, a, b) blocks at (N, a) x (N, b) indices."""
        shape = blocks.shape
        self.data.append(blocks.ravel())
        self.rows.append(
            np.broadcast_to(rows[:, :, None], shape).ravel()
        )
        self.cols.append(
            np.broadcast_to(cols[:, None, :], shape).ravel()
        )

    def add_entries(self, data, rows, cols):
        self.data.append(np.asarray(data, dtype=np.float64).ravel())
        self.rows.append(np.asarray(rows).ravel())
        self.cols.append(np.asarray(cols).ravel())

    def tocsr(self, n):
        mat = sp.coo_matrix(
            (
                np.concatenate(self.data),
                (np.concatenate(self.rows), np.concatenate(self.cols)),
            ),
            shape=(n, n),
        )
        return mat.tocsr()


def _edge_projection_knowns(layout, tables, g):
    """Known-value arrays fixing boundary interface data to Q_b g."""
    mesh = layout.mesh
    gb = weakcalc.project_edge(g, tables)  # (E, 2, d)
    known = np.zeros(layout.total, dtype=bool)
    vals = np.zeros(layout.total)
    two_d = 2 * layout.d_e
    for e in np.nonzero(mesh.boundary_mask)[0]:
        if layout.scheme == "hwg":
            t1, l1 = mesh.edge_elements[e, 0], mesh.edge_local[e, 0]
            dofs = layout.side_dofs(t1, l1)
        else:
            dofs = layout.edge_dofs(e)
        known[dofs] = True
        vals[dofs] = gb[e].ravel()
    return known, vals


def assemble_wg(tables, lf, f, g):
    """Assemble the single-valued-interface scheme on a mesh.

    Unknowns: interior velocity, one velocity set per edge, element
    pressures, and the mean-pressure multiplier.  Boundary edge sets
    are fixed to Q_b g and eliminated at solve time.
    """
    layout = make_layout("wg", tables.mesh, tables.k)
    return _assemble_saddle(layout, tables, lf, f, g)


def assemble_hwg(tables, lf, f, g):
    """Assemble the hybridized scheme with per-side interface data.

    Adds one signed multiplier unknown per edge component gluing the
    two sides: +xi enters the T1-side equations, -xi the T2-side ones.
    Boundary multipliers are fixed to zero and eliminated.
    """
    layout = make_layout("hwg", tables.mesh, tables.k)
    return _assemble_saddle(layout, tables, lf, f, g)


def _assemble_saddle(layout, tables, lf, f, g):
    mesh = tables.mesh
    T = mesh.num_elements
    vel_map = layout.velocity_map()
    pres_map = layout.pressure_map()
    mvec = forms_mod.pressure_means(tables)
    F = forms_mod.load_vector(f, tables)

    bag = _TripletBag()
    bag.add_blocks(lf.A, vel_map, vel_map)
    bag.add_blocks(-np.transpose(lf.B, (0, 2, 1)), vel_map, pres_map)
    bag.add_blocks(-lf.B, pres_map, vel_map)
    mu_col = np.full((T, 1), layout.mu_index)
    bag.add_blocks(mvec[:, :, None], pres_map, mu_col)
    bag.add_blocks(mvec[:, None, :], mu_col, pres_map)

    if layout.scheme == "hwg":
        # multiplier coupling: -C^T in the velocity rows, -C in its own
        two_d = 2 * layout.d_e
        sides = layout.off_face + (
            (np.arange(T)[:, None] * 3 + np.arange(3)) * two_d
        )
        side_rows = (sides[:, :, None] + np.arange(two_d)).reshape(-1)
        xi_cols = (
            layout.off_xi
            + mesh.element_edges[:, :, None] * two_d
            + np.arange(two_d)
        ).reshape(-1)
        t1 = mesh.edge_elements[mesh.element_edges, 0]  # (T, 3)
        sigma = np.where(t1 == np.arange(T)[:, None], 1.0, -1.0)
        vals = -np.repeat(sigma.ravel(), two_d)
        bag.add_entries(vals, side_rows, xi_cols)
        bag.add_entries(vals, xi_cols, side_rows)

    rhs = np.zeros(layout.total)
    np.add.at(rhs, vel_map, F)

    known, vals = _edge_projection_knowns(layout, tables, g)
    if layout.scheme == "hwg":
        for e in np.nonzero(mesh.boundary_mask)[0]:
            known[layout.xi_dofs(e)] = True  # boundary multipliers vanish
    matrix = bag.tocsr(layout.total)
    return SaddleSystem(
        matrix=matrix, rhs=rhs, layout=layout,
        known_mask=known, known_values=vals,
    )


def solve_linear(system):
    """Eliminate known DOFs, factorize, refine; return (x, residual).

    Direct sparse LU with iterative refinement until the relative
    residual on the unknown rows drops below SOLVE_RTOL.  Raises
    SingularSystemError naming the offending DOF when the
    factorization hits a (near-)zero pivot.
    """
    layout = system.layout
    unk = np.nonzero(~system.known_mask)[0]
    kno = np.nonzero(system.known_mask)[0]
    A = system.matrix
    Au = A[unk]
    Auu = Au[:, unk].tocsc()
    b = system.rhs[unk]
    if len(kno):
        b = b - Au[:, kno] @ system.known_values[kno]

    try:
        lu = spla.splu(Auu)
    except RuntimeError as exc:  # SuperLU signals exact singularity
        raise SingularSystemError(f"factorization failed: {exc}") from exc
    diag = np.abs(lu.U.diagonal())
    if diag.min() < PIVOT_RTOL * diag.max():
        j = int(np.argmin(diag))
        dof = int(unk[lu.perm_c[j]])
        raise SingularSystemError(
            f"near-zero pivot ({diag.min():.2e}) at {layout.describe(dof)}"
        )

    x = lu.solve(b)
    bnorm = max(float(np.linalg.norm(b)), 1e-300)
    resid = float(np.linalg.norm(b - Auu @ x)) / bnorm
    for _ in range(10):
        if resid <= SOLVE_RTOL:
            break
        x = x + lu.solve(b - Auu @ x)
        resid = float(np.linalg.norm(b - Auu @ x)) / bnorm
    if resid > SOLVE_RTOL:
        raise SingularSystemError(
            f"iterative refinement stalled at residual {resid:.2e}"
        )

    full = np.array(system.known_values)
    full[unk] = x
    return full, resid


def solve(system):
    """Solve an assembled "wg" or "hwg" system into a StokesSolution."""
    layout = system.layout
    if layout.scheme not in ("wg", "hwg"):
        raise ValueError("solve() handles wg/hwg layouts; see reduction")
    x, resid = solve_linear(system)
    mesh = layout.mesh
    T, E = mesh.num_elements, mesh.num_edges
    u0 = x[: layout.off_face].reshape(T, 2, layout.m_k)
    p = x[layout.off_pressure : layout.off_pressure + layout.n_pressure]
    p = p.reshape(T, layout.m_r)
    mu = float(x[layout.mu_index])
    if layout.scheme == "wg":
        ub = x[layout.off_face : layout.off_pressure].reshape(E, 2, layout.d_e)
        ub_sides = ub[mesh.element_edges]
        xi = None
    else:
        sides = x[layout.off_face : layout.off_pressure]
        ub_sides = sides.reshape(T, 3, 2, layout.d_e)
        t1, l1 = mesh.edge_elements[:, 0], mesh.edge_local[:, 0]
        ub = ub_sides[t1, l1]
        xi = x[layout.off_xi : layout.off_xi + layout.n_xi]
        xi = xi.reshape(E, 2, layout.d_e)
    return StokesSolution(
        scheme=layout.scheme, k=layout.k, u0=u0, ub=ub,
        ub_sides=np.ascontiguousarray(ub_sides), p=p, xi=xi, mu=mu,
        residual=resid,
    )


def recover_multiplier(sol, lf):
    """Edge multiplier from a solved (u, p) pair, T1-side convention.

    Per element the boundary rows of A u - B^T p are the multiplier
    each side owes; averaging the two (sign-flipped) sides of an edge
    gives the single signed unknown.  Boundary edges carry zero.
    """
    tables = lf.tables
    mesh = tables.mesh
    u_loc = weakcalc.pack_local(tables, sol.u0, sol.ub_sides)
    zeta = forms_mod.zeta_elements(lf, u_loc, sol.p)
    sides = weakcalc.gather_sides(mesh, zeta)
    xi = 0.5 * (sides[:, 0] - sides[:, 1])
    xi[mesh.boundary_mask] = 0.0
    return xi


def pressure_mean(sol, tables):
    """Domain integral of the pressure field (should vanish)."""
    return float(np.sum(forms_mod.pressure_means(tables) * sol.p))
