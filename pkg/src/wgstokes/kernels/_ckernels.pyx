# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lane of the per-element kernels.

Mirrors `_pykernels` function for function; see that module for the
DOF-layout and row-block conventions.  Plain loops over elements with
typed memoryviews; the interior-block factorization is a hand-rolled
Cholesky (blocks are tiny, LAPACK call overhead would dominate).
"""

import numpy as np

from libc.math cimport sqrt

from numpy.linalg import LinAlgError


def weak_maps(const double[:, ::1] wq,
              const double[:, :, ::1] phi,
              const double[:, :, :, ::1] dphi,
              const double[:, :, ::1] we_loc,
              const double[:, :, :, ::1] chi_loc,
              const double[:, :, :, ::1] phi_tr,
              const double[:, :, ::1] normals,
              int m_r, int d_e):
    cdef Py_ssize_t T = phi.shape[0]
    cdef Py_ssize_t q = phi.shape[1]
    cdef Py_ssize_t m_k = phi.shape[2]
    cdef Py_ssize_t qe = chi_loc.shape[2]
    cdef Py_ssize_t n_loc = 2 * m_k + 6 * d_e
    G_arr = np.zeros((T, 4 * m_r, n_loc))
    Wdiv_arr = np.zeros((T, m_r, n_loc))
    R_arr = np.zeros((T, 3, d_e, m_k))
    cdef double[:, :, ::1] G = G_arr
    cdef double[:, :, ::1] Wdiv = Wdiv_arr
    cdef double[:, :, :, ::1] R = R_arr
    cdef Py_ssize_t t, i, j, p, le, c, c0
    cdef double dx, dy, w, s, nx, ny

    for t in range(T):
        for i in range(m_r):
            for j in range(m_k):
                dx = 0.0
                dy = 0.0
                for p in range(q):
                    w = wq[t, p] * phi[t, p, j]
                    dx += w * dphi[t, p, i, 0]
                    dy += w * dphi[t, p, i, 1]
                G[t, i, j] -= dx                        # (xx)
                G[t, m_r + i, j] -= dy                  # (xy)
                G[t, 2 * m_r + i, m_k + j] -= dx        # (yx)
                G[t, 3 * m_r + i, m_k + j] -= dy        # (yy)
        for le in range(3):
            nx = normals[t, le, 0]
            ny = normals[t, le, 1]
            c0 = 2 * m_k + le * 2 * d_e
            for i in range(m_r):
                for j in range(d_e):
                    s = 0.0
                    for p in range(qe):
                        s += we_loc[t, le, p] * phi_tr[t, le, p, i] * chi_loc[t, le, p, j]
                    G[t, i, c0 + j] += nx * s
                    G[t, m_r + i, c0 + j] += ny * s
                    G[t, 2 * m_r + i, c0 + d_e + j] += nx * s
                    G[t, 3 * m_r + i, c0 + d_e + j] += ny * s
            for i in range(d_e):
                for j in range(m_k):
                    s = 0.0
                    for p in range(qe):
                        s += we_loc[t, le, p] * chi_loc[t, le, p, i] * phi_tr[t, le, p, j]
                    R[t, le, i, j] = s
        for i in range(m_r):
            for c in range(n_loc):
                Wdiv[t, i, c] = G[t, i, c] + G[t, 3 * m_r + i, c]
    return G_arr, Wdiv_arr, R_arr


def local_forms(const double[:, :, ::1] G,
                const double[:, :, ::1] Wdiv,
                const double[:, :, :, ::1] R,
                const double[::1] h_T,
                int m_k, int m_r, int d_e):
    cdef Py_ssize_t T = G.shape[0]
    cdef Py_ssize_t nr = G.shape[1]
    cdef Py_ssize_t n_loc = G.shape[2]
    A_arr = np.zeros((T, n_loc, n_loc))
    S_arr = np.zeros((T, n_loc, n_loc))
    B_arr = np.asarray(Wdiv).copy()
    cdef double[:, :, ::1] A = A_arr
    cdef double[:, :, ::1] S = S_arr
    cdef Py_ssize_t t, i, j, r, le, alpha, c0, i0
    cdef double s, ih

    for t in range(T):
        for i in range(n_loc):
            for j in range(i, n_loc):
                s = 0.0
                for r in range(nr):
                    s += G[t, r, i] * G[t, r, j]
                A[t, i, j] = s
                A[t, j, i] = s
        ih = 1.0 / h_T[t]
        for le in range(3):
            for alpha in range(2):
                i0 = alpha * m_k
                c0 = 2 * m_k + le * 2 * d_e + alpha * d_e
                for i in range(m_k):
                    for j in range(m_k):
                        s = 0.0
                        for r in range(d_e):
                            s += R[t, le, r, i] * R[t, le, r, j]
                        S[t, i0 + i, i0 + j] += ih * s
                for r in range(d_e):
                    for j in range(m_k):
                        S[t, i0 + j, c0 + r] -= ih * R[t, le, r, j]
                        S[t, c0 + r, i0 + j] -= ih * R[t, le, r, j]
                    S[t, c0 + r, c0 + r] += ih
        for i in range(n_loc):
            for j in range(n_loc):
                A[t, i, j] += S[t, i, j]
    return A_arr, B_arr, S_arr


cdef int _cholesky(double[:, ::1] L, Py_ssize_t n) noexcept:
    # in-place lower Cholesky; fails on non-positive pivots
    cdef Py_ssize_t i, j, p
    cdef double s
    for j in range(n):
        s = L[j, j]
        for p in range(j):
            s -= L[j, p] * L[j, p]
        if s <= 0.0:
            return -1
        L[j, j] = sqrt(s)
        for i in range(j + 1, n):
            s = L[i, j]
            for p in range(j):
                s -= L[i, p] * L[j, p]
            L[i, j] = s / L[j, j]
    return 0


cdef void _chol_solve(const double[:, ::1] L, double[::1] x, Py_ssize_t n) noexcept:
    cdef Py_ssize_t i, p
    cdef double s
    for i in range(n):
        s = x[i]
        for p in range(i):
            s -= L[i, p] * x[p]
        x[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for p in range(i + 1, n):
            s -= L[p, i] * x[p]
        x[i] = s / L[i, i]


def condense(const double[:, :, ::1] A,
             const double[:, :, ::1] B,
             const double[:, ::1] F,
             int ni):
    cdef Py_ssize_t T = A.shape[0]
    cdef Py_ssize_t n_loc = A.shape[1]
    cdef Py_ssize_t nb = n_loc - ni
    cdef Py_ssize_t m_r = B.shape[1]

    R0b_arr = np.zeros((T, ni, nb))
    R0p_arr = np.zeros((T, ni, m_r))
    r00_arr = np.zeros((T, ni))
    Suu_arr = np.zeros((T, nb, nb))
    K_arr = np.zeros((T, nb, m_r))
    Dpp_arr = np.zeros((T, m_r, m_r))
    rb_arr = np.zeros((T, nb))
    rp_arr = np.zeros((T, m_r))
    cdef double[:, :, ::1] R0b = R0b_arr
    cdef double[:, :, ::1] R0p = R0p_arr
    cdef double[:, ::1] r00 = r00_arr
    cdef double[:, :, ::1] Suu = Suu_arr
    cdef double[:, :, ::1] K = K_arr
    cdef double[:, :, ::1] Dpp = Dpp_arr
    cdef double[:, ::1] rb = rb_arr
    cdef double[:, ::1] rp = rp_arr

    L_arr = np.zeros((ni, ni))
    x_arr = np.zeros(ni)
    cdef double[:, ::1] L = L_arr
    cdef double[::1] x = x_arr
    cdef Py_ssize_t t, i, j, c, p
    cdef double s

    for t in range(T):
        for i in range(ni):
            for j in range(ni):
                L[i, j] = A[t, i, j]
        if _cholesky(L, ni) != 0:
            raise LinAlgError(f"interior velocity block of element {t} not SPD")

        for c in range(nb):
            for i in range(ni):
                x[i] = A[t, i, ni + c]
            _chol_solve(L, x, ni)
            for i in range(ni):
                R0b[t, i, c] = -x[i]
        for c in range(m_r):
            for i in range(ni):
                x[i] = B[t, c, i]
            _chol_solve(L, x, ni)
            for i in range(ni):
                R0p[t, i, c] = x[i]
        for i in range(ni):
            x[i] = F[t, i]
        _chol_solve(L, x, ni)
        for i in range(ni):
            r00[t, i] = x[i]

        # Suu = Abb + Ab0 R0b, K = Ab0 R0p - Bb^T, Dpp = -Bi R0p
        for i in range(nb):
            for j in range(nb):
                s = A[t, ni + i, ni + j]
                for p in range(ni):
                    s += A[t, ni + i, p] * R0b[t, p, j]
                Suu[t, i, j] = s
            for j in range(m_r):
                s = -B[t, j, ni + i]
                for p in range(ni):
                    s += A[t, ni + i, p] * R0p[t, p, j]
                K[t, i, j] = s
            s = 0.0
            for p in range(ni):
                s -= A[t, ni + i, p] * r00[t, p]
            rb[t, i] = s
        for i in range(m_r):
            for j in range(m_r):
                s = 0.0
                for p in range(ni):
                    s -= B[t, i, p] * R0p[t, p, j]
                Dpp[t, i, j] = s
            s = 0.0
            for p in range(ni):
                s += B[t, i, p] * r00[t, p]
            rp[t, i] = s
    return R0b_arr, R0p_arr, r00_arr, Suu_arr, K_arr, Dpp_arr, rb_arr, rp_arr
