"""Local bilinear forms of the velocity-pressure-multiplier system.

Per element T the scheme uses

    s_T(v, w) = h_T^{-1} <Q_b v_0 - v_b, Q_b w_0 - w_b>_{dT}
    a_T(v, w) = (grad_w v, grad_w w)_T + s_T(v, w)
    b_T(v, q) = (div_w v, q)_T
    c_T(v, l) = <v_b, l>_{dT}

All four are realized as dense matrices over the local coefficient
vector (layout documented in `weakcalc`).  c_T needs no stored matrix:
with orthonormal edge bases it is a plain dot product against the
boundary blocks.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, weakcalc


@dataclass(frozen=True)
class LocalForms:
    """Element matrices of the bilinear forms.

    A : (T, n_loc, n_loc) matrix of a_T (symmetric positive semidef.)
    B : (T, m_r, n_loc) matrix of b_T (pressure-test rows)
    S : (T, n_loc, n_loc) stabilizer part of A, kept for diagnostics
    maps : the WeakMaps the matrices were built from
    tables : the MeshTables (quadrature + bases) in force
    """

    A: np.ndarray
    B: np.ndarray
    S: np.ndarray
    maps: weakcalc.WeakMaps
    tables: object

    @property
    def n_loc(self):
        return self.A.shape[-1]


def assemble_local(tables):
    """Build LocalForms for every element of the mesh."""
    maps = weakcalc.build_weak_maps(tables)
    A, B, S = kernels.local_forms(
        maps.G, maps.Wdiv, maps.R, tables.mesh.h_T,
        tables.m_k, tables.m_r, tables.d_e,
    )
    return LocalForms(A=A, B=B, S=S, maps=maps, tables=tables)


def stabilizer(forms, t, v, w):
    """s_T(v, w) for local coefficient vectors v, w on element t."""
    return float(np.asarray(v) @ forms.S[t] @ np.asarray(w))


def form_a(forms, t, v, w):
    """a_T(v, w) = (grad_w v, grad_w w)_T + s_T(v, w)."""
    return float(np.asarray(v) @ forms.A[t] @ np.asarray(w))


def form_b(forms, t, v, q):
    """b_T(v, q) with q the local pressure coefficients (m_r,)."""
    return float(np.asarray(q) @ (forms.B[t] @ np.asarray(v)))


def form_c(forms, t, v, lam):
    """c_T(v, lam) with lam per local edge/component, shape (3, 2, d).

    Orthonormal edge bases make the boundary integral a coefficient
    dot product of the edge blocks of v against lam.
    """
    _, vb = weakcalc.unpack_local(forms.tables, np.asarray(v))
    return float(np.sum(vb * np.asarray(lam)))


def load_vector(f, tables):
    """(f, v_0)_T moments for every element, shape (T, n_loc).

    Only the interior blocks are nonzero: edge unknowns never pair
    with the volume forcing.
    """
    mom = weakcalc.project_interior(f, tables)  # (T, 2, m_k)
    T = tables.mesh.num_elements
    F = np.zeros((T, tables.n_loc))
    F[:, : 2 * tables.m_k] = mom.reshape(T, 2 * tables.m_k)
    return F


def pressure_means(tables):
    """Integral of each pressure basis function, shape (T, m_r).

    These are the coefficients of the global zero-mean constraint
    (only the constant mode has a nonzero entry, but the quadrature
    form keeps the code degree-agnostic).
    """
    return np.einsum(
        "tq,tqi->ti", tables.wq, tables.phi[:, :, : tables.m_r]
    )


def zeta_elements(forms, u_loc, p):
    """Boundary residual rows (A u - B^T p) of every element.

    For a weak function w_h = {w_0, w_b} and local pressure p this is
    the multiplier on dT solving c_T(v, zeta) = a_T(w_h, v) - b_T(v, p)
    over boundary test functions v = {0, v_b}; with orthonormal edge
    bases the edge mass matrix is the identity, so the rows ARE the
    coefficients.  Returns (T, 3, 2, d).
    """
    tables = forms.tables
    ni = 2 * tables.m_k
    rows = np.einsum("tbj,tj->tb", forms.A[:, ni:, :], u_loc)
    rows -= np.einsum("tpb,tp->tb", forms.B[:, :, ni:], p)
    return rows.reshape(-1, 3, 2, tables.d_e)
