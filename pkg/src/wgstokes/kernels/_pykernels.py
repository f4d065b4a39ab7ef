"""Pure-NumPy implementation of the per-element hot kernels.

Batched over all elements with einsum/matmul; no Python-level loops
over elements.  Shares its call signatures with the compiled lane in
``_ckernels`` so the two are interchangeable.

Local velocity DOF order on an element (n_loc = 2*m_k + 6*d columns):
interior-x (m_k), interior-y (m_k), then per local edge in
element_edges order a [x-block (d), y-block (d)] pair.  Tensor-valued
outputs are grouped in row blocks (xx, xy, yx, yy), i.e. block index
2*alpha + beta holds component (d_beta v_alpha).
"""

import numpy as np


def weak_maps(wq, phi, dphi, we_loc, chi_loc, phi_tr, normals, m_r, d_e):
    """Per-element weak gradient / divergence / trace-moment maps.

    Parameters
    ----------
    wq : (T, q) element quadrature weights
    phi : (T, q, m_k) scalar P_k basis values
    dphi : (T, q, m_k, 2) basis gradients
    we_loc : (T, 3, qe) edge weights gathered per local edge
    chi_loc : (T, 3, qe, d) edge basis values per local edge
    phi_tr : (T, 3, qe, m_k) element basis traces on its edges
    normals : (T, 3, 2) outward unit normals
    m_r, d_e : dims of P_{k-1}(T) and P_{k-1}(e)

    Returns
    -------
    G : (T, 4*m_r, n_loc) weak gradient map (tensor coefficients)
    Wdiv : (T, m_r, n_loc) weak divergence map
    R : (T, 3, d, m_k) edge moments <chi_i, phi_j>_e (trace projection)
    """
    T, q, m_k = phi.shape
    n_loc = 2 * m_k + 6 * d_e

    # D[t, beta, i, j] = (phi_j, d_beta psi_i)_T with psi the P_{k-1} head
    D = np.einsum("tq,tqib,tqj->tbij", wq, dphi[:, :, :m_r, :], phi)
    # M[t, le, i, j] = <chi_j, psi_i>_e, R[t, le, i, j] = <chi_i, phi_j>_e
    M = np.einsum("tlq,tlqi,tlqj->tlij", we_loc, phi_tr[:, :, :, :m_r], chi_loc)
    R = np.einsum("tlq,tlqi,tlqj->tlij", we_loc, chi_loc, phi_tr)

    G = np.zeros((T, 4 * m_r, n_loc))
    for alpha in (0, 1):
        for beta in (0, 1):
            rows = slice((2 * alpha + beta) * m_r, (2 * alpha + beta + 1) * m_r)
            G[:, rows, alpha * m_k : (alpha + 1) * m_k] = -D[:, beta]
            for le in range(3):
                c0 = 2 * m_k + le * 2 * d_e + alpha * d_e
                G[:, rows, c0 : c0 + d_e] = (
                    normals[:, le, beta, None, None] * M[:, le]
                )
    # trace of the weak gradient: (xx rows) + (yy rows)
    Wdiv = G[:, : m_r, :] + G[:, 3 * m_r :, :]
    return G, np.ascontiguousarray(Wdiv), R


def local_forms(G, Wdiv, R, h_T, m_k, m_r, d_e):
    """Local stiffness A = G^T G + S, divergence B, stabilizer S.

    The stabilizer penalizes (Q_b of interior trace) - (edge unknown)
    per edge and component, scaled by 1/h_T; with orthonormal edge
    bases its edge integral is a plain coefficient norm, built from
    the moment rows in R.
    """
    T, _, n_loc = G.shape
    A = np.einsum("tri,trj->tij", G, G)
    S = np.zeros((T, n_loc, n_loc))
    inv_h = 1.0 / h_T
    eye = np.eye(d_e)
    for le in range(3):
        Rl = R[:, le]  # (T, d, m_k)
        RtR = np.einsum("t,tdi,tdj->tij", inv_h, Rl, Rl)
        Rw = inv_h[:, None, None] * Rl
        for alpha in (0, 1):
            isl = slice(alpha * m_k, (alpha + 1) * m_k)
            c0 = 2 * m_k + le * 2 * d_e + alpha * d_e
            esl = slice(c0, c0 + d_e)
            S[:, isl, isl] += RtR
            S[:, isl, esl] -= Rw.transpose(0, 2, 1)
            S[:, esl, isl] -= Rw
            S[:, esl, esl] += inv_h[:, None, None] * eye
    A += S
    B = np.array(Wdiv)
    return A, B, S


def condense(A, B, F, ni):
    """Eliminate the interior velocity block of each element.

    Solves the interior rows for u_0 = r00 + R0b u_b + R0p p and
    substitutes into the remaining rows.  A's interior block is SPD
    (stabilizer), so Cholesky doubles as the singularity check.

    Returns
    -------
    R0b, R0p, r00 : recovery map (T, ni, nb), (T, ni, m_r), (T, ni)
    Suu : (T, nb, nb) condensed velocity block
    K : (T, nb, m_r) velocity-pressure coupling
    Dpp : (T, m_r, m_r) pressure block (negative semidefinite)
    rb, rp : condensed right-hand sides (T, nb), (T, m_r)
    """
    A00 = A[:, :ni, :ni]
    A0b = A[:, :ni, ni:]
    Ab0 = A[:, ni:, :ni]
    Abb = A[:, ni:, ni:]
    Bi = B[:, :, :ni]
    Bb = B[:, :, ni:]
    F0 = F[:, :ni]

    np.linalg.cholesky(A00)  # raises LinAlgError if any block is not SPD
    R0b = -np.linalg.solve(A00, A0b)
    R0p = np.linalg.solve(A00, Bi.transpose(0, 2, 1))
    r00 = np.linalg.solve(A00, F0[:, :, None])[:, :, 0]

    Suu = Abb + Ab0 @ R0b
    K = Ab0 @ R0p - Bb.transpose(0, 2, 1)
    Dpp = -Bi @ R0p
    rb = -np.einsum("tbi,ti->tb", Ab0, r00)
    rp = np.einsum("tpi,ti->tp", Bi, r00)
    return R0b, R0p, r00, Suu, K, Dpp, rb, rp
