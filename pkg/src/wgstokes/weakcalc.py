"""Discrete weak calculus on a triangulated domain.

A weak function on an element is a pair {v_0, v_b}: an interior
vector-valued P_k polynomial plus an independent vector-valued
P_{k-1} polynomial on each edge.  This module provides

* the L2 projections onto interior, pressure and edge spaces (moment
  integrals, since all bases are orthonormal),
* the discrete weak gradient and weak divergence, realized as one
  matrix per element acting on the local coefficient vector,
* jump and similarity of per-side edge data.

Local coefficient order (n_loc entries): interior-x (m_k), interior-y
(m_k), then per local edge an [x (d), y (d)] block, edges in
element_edges order.  Weak gradients are returned as coefficients of
the orthonormal tensor basis in row blocks (xx, xy, yx, yy), where
component (alpha, beta) approximates d_beta v_alpha.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class WeakMaps:
    """Per-element weak-operator matrices.

    G : (T, 4*m_r, n_loc) weak gradient map
    Wdiv : (T, m_r, n_loc) weak divergence map; equals the trace (xx+yy
        row blocks) of G
    R : (T, 3, d, m_k) per-edge moments <chi_i, phi_j>_e, i.e. the
        matrix of Q_b applied to interior traces
    """

    G: np.ndarray
    Wdiv: np.ndarray
    R: np.ndarray


def build_weak_maps(tables):
    """Assemble WeakMaps for every element of the mesh."""
    mesh = tables.mesh
    we_loc = np.ascontiguousarray(tables.we[mesh.element_edges])
    chi_loc = np.ascontiguousarray(tables.chi[mesh.element_edges])
    G, Wdiv, R = kernels.weak_maps(
        tables.wq, tables.phi, tables.dphi, we_loc, chi_loc,
        tables.phi_tr, mesh.normals, tables.m_r, tables.d_e,
    )
    return WeakMaps(G=G, Wdiv=Wdiv, R=R)


# ---------------------------------------------------------------------------
# local coefficient packing
# ---------------------------------------------------------------------------

def interior_slice(tables, comp):
    """Columns of interior component `comp` (0 = x, 1 = y)."""
    return slice(comp * tables.m_k, (comp + 1) * tables.m_k)

def edge_slice(tables, le, comp):
    """Columns of the edge block (local edge le, component comp)."""
    c0 = 2 * tables.m_k + le * 2 * tables.d_e + comp * tables.d_e
    return slice(c0, c0 + tables.d_e)

def pack_local(tables, v0, vb):
    """Local vectors from v0 (..., 2, m_k) and vb (..., 3, 2, d)."""
    v0 = np.asarray(v0, dtype=np.float64)
    vb = np.asarray(vb, dtype=np.float64)
    lead = v0.shape[:-2]
    return np.concatenate(
        [v0.reshape(lead + (2 * tables.m_k,)),
         vb.reshape(lead + (6 * tables.d_e,))],
        axis=-1,
    )

def unpack_local(tables, vloc):
    """Inverse of pack_local: (..., n_loc) -> (v0, vb)."""
    lead = vloc.shape[:-1]
    split = 2 * tables.m_k
    v0 = vloc[..., :split].reshape(lead + (2, tables.m_k))
    vb = vloc[..., split:].reshape(lead + (3, 2, tables.d_e))
    return v0, vb


# ---------------------------------------------------------------------------
# L2 projections (orthonormal bases: projection = moment integrals)
# ---------------------------------------------------------------------------

def project_interior(func, tables):
    """Q_0: project a vector field onto [P_k(T)]^2, all elements.

    func maps points (..., 2) to values (..., 2); uses the oversampled
    data rule.  Returns coefficients (T, 2, m_k).
    """
    vals = np.asarray(func(tables.xq_hi))
    return np.einsum("tq,tqc,tqi->tci", tables.wq_hi, vals, tables.phi_hi)


def project_pressure(func, tables):
    """Project a scalar field onto P_{k-1}(T); returns (T, m_r)."""
    vals = np.asarray(func(tables.xq_hi))
    return np.einsum(
        "tq,tq,tqi->ti", tables.wq_hi, vals, tables.phi_hi[:, :, : tables.m_r]
    )


def project_edge(func, tables):
    """Q_b: project a vector field onto [P_{k-1}(e)]^2, all edges.

    Returns coefficients (E, 2, d) in the shared global edge bases.
    """
    vals = np.asarray(func(tables.xe_hi))
    return np.einsum("eq,eqc,eqi->eci", tables.we_hi, vals, tables.chi_hi)


def project_edge_values(vals, tables):
    """Q_b from precomputed samples at the hi edge rule points."""
    return np.einsum("eq,eqc,eqi->eci", tables.we_hi, vals, tables.chi_hi)


# ---------------------------------------------------------------------------
# weak operators
# ---------------------------------------------------------------------------

def weak_gradient(maps, t, vloc):
    """Tensor coefficients (4*m_r,) of the weak gradient on element t."""
    return maps.G[t] @ np.asarray(vloc)


def weak_divergence(maps, t, vloc):
    """Scalar P_{k-1} coefficients (m_r,) of the weak divergence."""
    return maps.Wdiv[t] @ np.asarray(vloc)


# ---------------------------------------------------------------------------
# jump and similarity of per-side edge data
# ---------------------------------------------------------------------------

def gather_sides(mesh, per_side):
    """Reorder per-element edge data (T, 3, ...) into (E, 2, ...).

    Slot 0 holds the T1-side value, slot 1 the T2-side value (zero on
    boundary edges, where there is no second side).
    """
    E = mesh.num_edges
    out = np.zeros((E, 2) + per_side.shape[2:])
    t1, l1 = mesh.edge_elements[:, 0], mesh.edge_local[:, 0]
    out[:, 0] = per_side[t1, l1]
    interior = ~mesh.boundary_mask
    t2, l2 = mesh.edge_elements[interior, 1], mesh.edge_local[interior, 1]
    out[interior, 1] = per_side[t2, l2]
    return out


def jump(mesh, sides, e):
    """[[v]] on edge e: T1-side minus T2-side, or the value itself on
    a boundary edge.  `sides` is an (E, 2, ...) array (gather_sides)."""
    if mesh.boundary_mask[e]:
        return np.array(sides[e, 0])
    return sides[e, 0] - sides[e, 1]


def similarity(mesh, sides, e):
    """<<v>> on edge e: sum of the two side values, zero on boundary."""
    if mesh.boundary_mask[e]:
        return np.zeros_like(np.asarray(sides[e, 0]))
    return sides[e, 0] + sides[e, 1]


def jump_all(mesh, sides):
    """[[v]] on every edge at once, shape (E, ...)."""
    out = np.array(sides[:, 0])
    interior = ~mesh.boundary_mask
    out[interior] -= sides[interior, 1]
    return out


def similarity_all(mesh, sides):
    """<<v>> on every edge at once (zero rows on boundary edges)."""
    out = np.zeros_like(np.asarray(sides[:, 0]))
    interior = ~mesh.boundary_mask
    out[interior] = sides[interior, 0] + sides[interior, 1]
    return out
