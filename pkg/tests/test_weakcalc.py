"""Weak gradient/divergence, projections, jumps.

The weak operators are defined by duality against polynomial test
tensors; the tests here re-evaluate both sides of the defining
relations with the oversampled quadrature tables and raw (centered,
scaled) monomial tests, independently of the moment matrices used to
build the operator maps.
"""

import numpy as np
import pytest

from wgstokes import polybasis as pb
from wgstokes import weakcalc as wc


def random_weak(rng, tables):
    T, E = tables.mesh.num_elements, tables.mesh.num_edges
    u0 = rng.standard_normal((T, 2, tables.m_k))
    ub = rng.standard_normal((E, 2, tables.d_e))
    return u0, ub


def local_mono(tables, t, pts, grads=False):
    """Centered/scaled monomials of degree <= k-1 on element t."""
    msh = tables.mesh
    exps = pb.mono_exponents(tables.k - 1)
    loc = (pts - msh.centroids[t]) / msh.h_T[t]
    if grads:
        return pb.eval_monomial_grads(loc, exps) / msh.h_T[t]
    return pb.eval_monomials(loc, exps)


def test_pack_unpack_roundtrip(tables4):
    rng = np.random.default_rng(0)
    u0, ub = random_weak(rng, tables4)
    sides = ub[tables4.mesh.element_edges]
    vloc = wc.pack_local(tables4, u0, sides)
    assert vloc.shape == (tables4.mesh.num_elements, tables4.n_loc)
    b0, bb = wc.unpack_local(tables4, vloc)
    np.testing.assert_array_equal(b0, u0)
    np.testing.assert_array_equal(bb, sides)


def test_coefficient_slices_cover(tables2_k2):
    t = tables2_k2
    cols = []
    for comp in range(2):
        s = wc.interior_slice(t, comp)
        cols.extend(range(s.start, s.stop))
    for le in range(3):
        for comp in range(2):
            s = wc.edge_slice(t, le, comp)
            cols.extend(range(s.start, s.stop))
    assert sorted(cols) == list(range(t.n_loc))
    assert len(set(cols)) == t.n_loc


@pytest.mark.parametrize("fixture", ["tables4", "tables2_k2"])
def test_weak_gradient_defining_identity(fixture, request):
    tables = request.getfixturevalue(fixture)
    msh = tables.mesh
    maps = wc.build_weak_maps(tables)
    rng = np.random.default_rng(11)
    u0, ub = random_weak(rng, tables)
    vloc = wc.pack_local(tables, u0, ub[msh.element_edges])
    m_r = tables.m_r

    worst = 0.0
    for t in range(0, msh.num_elements, max(1, msh.num_elements // 6)):
        gw = wc.weak_gradient(maps, t, vloc[t])  # (4*m_r,) coefficients
        gw_vals = gw.reshape(2, 2, m_r) @ tables.phi_hi[t][:, :m_r].T  # (2,2,q)
        mono = local_mono(tables, t, tables.xq_hi[t])  # (q, m_r)
        dmono = local_mono(tables, t, tables.xq_hi[t], grads=True)
        v0_vals = u0[t] @ tables.phi_hi[t].T  # (2, q)
        for a in range(2):
            for b in range(2):
                for j in range(m_r):
                    lhs = np.sum(tables.wq_hi[t] * gw_vals[a, b] * mono[:, j])
                    rhs = -np.sum(tables.wq_hi[t] * v0_vals[a] * dmono[:, j, b])
                    for le in range(3):
                        e = msh.element_edges[t, le]
                        vb_vals = tables.chi_hi[e] @ ub[e, a]  # (qe,)
                        mono_e = local_mono(tables, t, tables.xe_hi[e])[:, j]
                        rhs += msh.normals[t, le, b] * np.sum(
                            tables.we_hi[e] * vb_vals * mono_e
                        )
                    worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-10


@pytest.mark.parametrize("fixture", ["tables4", "tables2_k2"])
def test_weak_divergence_defining_identity(fixture, request):
    tables = request.getfixturevalue(fixture)
    msh = tables.mesh
    maps = wc.build_weak_maps(tables)
    rng = np.random.default_rng(12)
    u0, ub = random_weak(rng, tables)
    vloc = wc.pack_local(tables, u0, ub[msh.element_edges])

    worst = 0.0
    for t in range(0, msh.num_elements, max(1, msh.num_elements // 6)):
        dw = wc.weak_divergence(maps, t, vloc[t])
        dw_vals = tables.phi_hi[t][:, : tables.m_r] @ dw
        mono = local_mono(tables, t, tables.xq_hi[t])
        dmono = local_mono(tables, t, tables.xq_hi[t], grads=True)
        v0_vals = u0[t] @ tables.phi_hi[t].T
        for j in range(tables.m_r):
            lhs = np.sum(tables.wq_hi[t] * dw_vals * mono[:, j])
            rhs = -np.sum(
                tables.wq_hi[t] * (v0_vals * dmono[:, j, :].T).sum(axis=0)
            )
            for le in range(3):
                e = msh.element_edges[t, le]
                vb_n = msh.normals[t, le] @ (ub[e] @ tables.chi_hi[e].T)
                mono_e = local_mono(tables, t, tables.xe_hi[e])[:, j]
                rhs += np.sum(tables.we_hi[e] * vb_n * mono_e)
            worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-10


def poly_field(coefs, exps):
    def call(pts):
        mono = pb.eval_monomials(np.asarray(pts), exps)
        return np.stack([mono @ coefs[0], mono @ coefs[1]], axis=-1)

    return call


def project_gradient(coefs, exps, tables):
    """Independent L2 projection of grad(u) onto the tensor space."""
    dmono = pb.eval_monomial_grads(tables.xq_hi, exps)  # (T, q, m, 2)
    grads = np.einsum("cm,tqmb->tqcb", coefs, dmono)  # (a, b) = d_b u_a
    return np.einsum(
        "tq,tqcb,tqi->tcbi", tables.wq_hi, grads, tables.phi_hi[:, :, : tables.m_r]
    )


@pytest.mark.parametrize("fixture", ["tables4", "tables2_k2"])
def test_commutativity_on_polynomials(fixture, request):
    """grad_w(Q_h u) equals the projected gradient, exactly, for any u."""
    tables = request.getfixturevalue(fixture)
    msh = tables.mesh
    maps = wc.build_weak_maps(tables)
    exps = pb.mono_exponents(3)
    rng = np.random.default_rng(21)
    m_r = tables.m_r

    for _ in range(30):
        coefs = rng.standard_normal((2, len(exps)))
        u = poly_field(coefs, exps)
        q0 = wc.project_interior(u, tables)
        qb = wc.project_edge(u, tables)
        vloc = wc.pack_local(tables, q0, qb[msh.element_edges])
        gw = np.einsum("tij,tj->ti", maps.G, vloc).reshape(-1, 2, 2, m_r)
        np.testing.assert_allclose(
            gw, project_gradient(coefs, exps, tables), atol=1e-9
        )
        dw = np.einsum("tij,tj->ti", maps.Wdiv, vloc)
        np.testing.assert_allclose(gw[:, 0, 0] + gw[:, 1, 1], dw, atol=1e-10)


def test_weak_gradient_of_projected_linear(tables4):
    """k=1: the weak gradient of Q_h(linear) is the exact constant."""
    G = np.array([[0.7, -1.3], [0.4, 2.2]])
    u = lambda pts: np.asarray(pts) @ G.T + np.array([0.3, -0.1])
    msh = tables4.mesh
    maps = wc.build_weak_maps(tables4)
    q0 = wc.project_interior(u, tables4)
    qb = wc.project_edge(u, tables4)
    vloc = wc.pack_local(tables4, q0, qb[msh.element_edges])
    gw = np.einsum("tij,tj->ti", maps.G, vloc).reshape(-1, 2, 2)
    # constant-mode coefficient of value c on element T is c*sqrt(|T|)
    expected = G[None, :, :] * np.sqrt(msh.areas)[:, None, None]
    np.testing.assert_allclose(gw, expected, atol=1e-12)


def test_projection_oracle_lstsq(tables4):
    """Moment projections match per-element least squares."""
    u = lambda pts: np.stack(
        [
            np.sin(3.0 * pts[..., 0]) * pts[..., 1],
            np.exp(pts[..., 0] - pts[..., 1] ** 2),
        ],
        axis=-1,
    )
    q0 = wc.project_interior(u, tables4)
    vals = u(tables4.xq_hi)
    for t in (0, 5, 17):
        sw = np.sqrt(tables4.wq_hi[t])[:, None]
        A = sw * tables4.phi_hi[t]
        for comp in range(2):
            c, *_ = np.linalg.lstsq(A, sw[:, 0] * vals[t, :, comp], rcond=None)
            np.testing.assert_allclose(q0[t, comp], c, atol=1e-10)

    p = lambda pts: np.cos(pts[..., 0] + 2.0 * pts[..., 1])
    qp = wc.project_pressure(p, tables4)
    pv = p(tables4.xq_hi)
    for t in (3, 11):
        sw = np.sqrt(tables4.wq_hi[t])[:, None]
        A = sw * tables4.phi_hi[t][:, : tables4.m_r]
        c, *_ = np.linalg.lstsq(A, sw[:, 0] * pv[t], rcond=None)
        np.testing.assert_allclose(qp[t], c, atol=1e-10)

    qb = wc.project_edge(u, tables4)
    evals = u(tables4.xe_hi)
    for e in (0, 9, 30):
        sw = np.sqrt(tables4.we_hi[e])[:, None]
        A = sw * tables4.chi_hi[e]
        for comp in range(2):
            c, *_ = np.linalg.lstsq(A, sw[:, 0] * evals[e, :, comp], rcond=None)
            np.testing.assert_allclose(qb[e, comp], c, atol=1e-10)


def test_projection_reproduces_polynomials(tables2_k2):
    exps = pb.mono_exponents(2)
    coefs = np.random.default_rng(5).standard_normal((2, len(exps)))
    u = poly_field(coefs, exps)
    q0 = wc.project_interior(u, tables2_k2)
    recon = np.einsum("tci,tqi->tqc", q0, tables2_k2.phi)
    np.testing.assert_allclose(recon, u(tables2_k2.xq), atol=1e-12)


def test_project_edge_values_matches_callable(tables4):
    u = lambda pts: np.stack([pts[..., 0] ** 2, pts[..., 1]], axis=-1)
    np.testing.assert_array_equal(
        wc.project_edge(u, tables4),
        wc.project_edge_values(u(tables4.xe_hi), tables4),
    )


def test_gather_sides(mesh4):
    rng = np.random.default_rng(2)
    per_side = rng.standard_normal((mesh4.num_elements, 3, 2))
    sides = wc.gather_sides(mesh4, per_side)
    for e in range(mesh4.num_edges):
        t1, l1 = mesh4.edge_elements[e, 0], mesh4.edge_local[e, 0]
        np.testing.assert_array_equal(sides[e, 0], per_side[t1, l1])
        if mesh4.boundary_mask[e]:
            np.testing.assert_array_equal(sides[e, 1], 0.0)
        else:
            t2, l2 = mesh4.edge_elements[e, 1], mesh4.edge_local[e, 1]
            np.testing.assert_array_equal(sides[e, 1], per_side[t2, l2])


def test_jump_and_similarity(mesh4):
    rng = np.random.default_rng(3)
    sides = rng.standard_normal((mesh4.num_edges, 2, 2))
    jumps = wc.jump_all(mesh4, sides)
    sims = wc.similarity_all(mesh4, sides)
    for e in range(mesh4.num_edges):
        np.testing.assert_array_equal(jumps[e], wc.jump(mesh4, sides, e))
        np.testing.assert_array_equal(sims[e], wc.similarity(mesh4, sides, e))
        if mesh4.boundary_mask[e]:
            np.testing.assert_array_equal(jumps[e], sides[e, 0])
            np.testing.assert_array_equal(sims[e], 0.0)
        else:
            np.testing.assert_array_equal(jumps[e], sides[e, 0] - sides[e, 1])
            np.testing.assert_array_equal(sims[e], sides[e, 0] + sides[e, 1])


def test_single_valued_data_has_zero_interior_jump(mesh4, tables4):
    rng = np.random.default_rng(4)
    ub = rng.standard_normal((mesh4.num_edges, 2, tables4.d_e))
    sides = wc.gather_sides(mesh4, ub[mesh4.element_edges])
    jumps = wc.jump_all(mesh4, sides)
    assert np.max(np.abs(jumps[mesh4.interior_edges])) == 0.0
