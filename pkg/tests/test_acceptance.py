"""Acceptance gate: one printed PASS/FAIL line per criterion.

Criteria, tolerances and reference numbers are pinned here.  The
repo-wide -rA option keeps the printed lines visible in the report.

Known failure, kept honest: criterion 2's interior-L2 magnitude at
h=1/8 measures about 21% from its reference value against a +/-20%
band.  The energy, pressure and multiplier error columns reproduce the
reference table to every printed digit, and the interior-L2 ORDER
gates (criteria 1 and 4) pass, so the discrepancy is a fixed scaling
of that one reference column, not a convergence defect.  See README.
"""

import time

import numpy as np
import pytest

from wgstokes import (
    analysis,
    forms,
    mesh as mesh_mod,
    polybasis,
    reduction,
    systems,
    weakcalc as wc,
)

LEVELS = [4, 8, 16, 32, 64, 128]
EQUIV_LEVELS = [4, 8, 16]


def report(num, ok, detail):
    print(f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


@pytest.fixture(scope="module")
def rec1():
    return analysis.run_convergence(1, 1, LEVELS, "schur")


@pytest.fixture(scope="module")
def rec2():
    return analysis.run_convergence(2, 1, LEVELS, "schur")


def test_criterion_1_example1_orders(rec1):
    ot = rec1.orders["triple"][-1]
    ol = rec1.orders["l2u"][-1]
    ok = abs(ot - 1.0) <= 0.05 and abs(ol - 2.0) <= 0.05
    report(
        1, ok,
        f"example 1 finest-pair orders: triple {ot:.4f} (need 1.00+/-0.05), "
        f"l2u {ol:.4f} (need 2.00+/-0.05)",
    )
    assert ok


def test_criterion_2_example1_magnitudes():
    case = analysis.make_case(1)
    msh = mesh_mod.build_uniform_square(8)
    sol, tables, lf = analysis.solve_on_mesh(case, msh, 1, "wg")
    norms = analysis.error_norms(sol, case, tables, lf)
    ref_triple, ref_l2u = 2.9253, 2.3750e-1
    dev_t = abs(norms["triple"] - ref_triple) / ref_triple
    dev_l = abs(norms["l2u"] - ref_l2u) / ref_l2u
    ok = dev_t <= 0.20 and dev_l <= 0.20
    report(
        2, ok,
        f"h=1/8 magnitudes: |||e||| {norms['triple']:.6f} vs {ref_triple} "
        f"(dev {dev_t:.2%}), ||e|| {norms['l2u']:.6f} vs {ref_l2u} "
        f"(dev {dev_l:.2%}), band 20%",
    )
    assert dev_t <= 0.20
    assert dev_l <= 0.20, (
        f"interior-L2 magnitude {norms['l2u']:.6f} deviates {dev_l:.2%} from "
        f"the reference 2.3750e-01 (allowed 20%). Known documented gap: the "
        f"other three columns match the reference to all printed digits and "
        f"the interior-L2 order gates pass (criteria 1 and 4); no tested "
        f"variant of the interior norm reproduces this one reference column."
    )


def test_criterion_3_example1_pressure_multiplier(rec1):
    op = rec1.orders["p"][-1]
    ol = rec1.orders["lambda"][-1]
    ok = abs(op - 1.0) <= 0.05 and ol >= 1.9
    report(
        3, ok,
        f"example 1 finest-pair orders: p {op:.4f} (need 1.00+/-0.05), "
        f"lambda {ol:.4f} (need >=1.9)",
    )
    assert ok


def test_criterion_4_example2_orders(rec2):
    ot = rec2.orders["triple"][-1]
    ou = rec2.orders["l2u"][-1]
    op = rec2.orders["p"][-1]
    ol = rec2.orders["lambda"][-1]
    ok = (
        abs(ot - 1.0) <= 0.05
        and abs(ou - 2.0) <= 0.05
        and op >= 1.5
        and ol >= 1.6
    )
    report(
        4, ok,
        f"example 2 finest-pair orders: triple {ot:.4f} (1.00+/-0.05), "
        f"l2u {ou:.4f} (2.00+/-0.05), p {op:.4f} (>=1.5), "
        f"lambda {ol:.4f} (>=1.6)",
    )
    assert ok


def test_criterion_5_scheme_equivalence():
    worst = 0.0
    for cid in (1, 2):
        case = analysis.make_case(cid)
        for n in EQUIV_LEVELS:
            msh = mesh_mod.build_uniform_square(n)
            tables = polybasis.build_tables(msh, 1)
            lf = forms.assemble_local(tables)
            base = analysis.error_norms(
                systems.solve(systems.assemble_wg(tables, lf, case.f, case.g)),
                case, tables, lf,
            )
            others = {
                "hwg": systems.solve(
                    systems.assemble_hwg(tables, lf, case.f, case.g)
                ),
                "schur": reduction.solve_reduced(tables, lf, case.f, case.g),
            }
            for sol in others.values():
                norms = analysis.error_norms(sol, case, tables, lf)
                for key in analysis.NORM_KEYS:
                    worst = max(
                        worst, abs(norms[key] - base[key]) / base[key]
                    )
    ok = worst <= 1e-6
    report(
        5, ok,
        f"hwg/schur vs wg on both examples, n in {EQUIV_LEVELS}: "
        f"max relative error-norm discrepancy {worst:.3e} (need <=1e-6)",
    )
    assert ok


def test_criterion_6_dof_counts():
    msh = mesh_mod.build_uniform_square(4)
    wg = systems.make_layout("wg", msh, 1)
    red = systems.make_layout("schur", msh, 1)
    n_wg = wg.n_interior + wg.n_face + wg.n_pressure
    n_red = red.n_face + red.n_pressure
    ok = n_wg == 336 and n_red == 144
    report(
        6, ok,
        f"n=4 unknown counts: unreduced {n_wg} (need 336), "
        f"reduced {n_red} (need 144)",
    )
    assert ok


def _check_commutativity(tables, count, rng):
    msh = tables.mesh
    maps = wc.build_weak_maps(tables)
    exps = polybasis.mono_exponents(3)
    mono_q = polybasis.eval_monomials(tables.xq_hi, exps)
    dmono_q = polybasis.eval_monomial_grads(tables.xq_hi, exps)
    mono_e = polybasis.eval_monomials(tables.xe_hi, exps)
    coefs = rng.standard_normal((count, 2, len(exps)))

    u_q = np.einsum("ncm,tqm->ntqc", coefs, mono_q)
    q0 = np.einsum("tq,ntqc,tqi->ntci", tables.wq_hi, u_q, tables.phi_hi)
    u_e = np.einsum("ncm,eqm->neqc", coefs, mono_e)
    qb = np.einsum("eq,neqc,eqi->neci", tables.we_hi, u_e, tables.chi_hi)
    vloc = wc.pack_local(tables, q0, qb[:, msh.element_edges])

    gw = np.einsum("tij,ntj->nti", maps.G, vloc)
    gw = gw.reshape(count, msh.num_elements, 2, 2, tables.m_r)
    grads = np.einsum("ncm,tqmb->ntqcb", coefs, dmono_q)
    proj = np.einsum(
        "tq,ntqcb,tqr->ntcbr",
        tables.wq_hi, grads, tables.phi_hi[:, :, : tables.m_r],
    )
    worst = float(np.max(np.abs(gw - proj)))

    dw = np.einsum("tij,ntj->nti", maps.Wdiv, vloc)
    worst = max(
        worst, float(np.max(np.abs(gw[:, :, 0, 0] + gw[:, :, 1, 1] - dw)))
    )
    return worst


def _check_energy_identity(tables, lf, count, rng):
    msh = tables.mesh
    worst = 0.0
    for _ in range(count):
        u0 = rng.standard_normal((msh.num_elements, 2, tables.m_k))
        ub = rng.standard_normal((msh.num_edges, 2, tables.d_e))
        sides = ub[msh.element_edges]
        vloc = wc.pack_local(tables, u0, sides)
        quad = float(np.einsum("ti,tij,tj->", vloc, lf.A, vloc))
        tri = analysis.norm_triple(lf, u0, sides)
        worst = max(worst, abs(quad - tri**2) / quad)
    return worst


def _local_monomials(tables, pts, grads=False):
    """Centered/scaled degree <= k-1 monomials, batched per element."""
    msh = tables.mesh
    exps = polybasis.mono_exponents(tables.k - 1)
    loc = (pts - msh.centroids[:, None, :]) / msh.h_T[:, None, None]
    if grads:
        return polybasis.eval_monomial_grads(loc, exps) / msh.h_T[:, None, None, None]
    return polybasis.eval_monomials(loc, exps)


def _check_defining_identities(tables, rng):
    msh = tables.mesh
    maps = wc.build_weak_maps(tables)
    m_r = tables.m_r
    u0 = rng.standard_normal((msh.num_elements, 2, tables.m_k))
    ub = rng.standard_normal((msh.num_edges, 2, tables.d_e))
    vloc = wc.pack_local(tables, u0, ub[msh.element_edges])

    mono = _local_monomials(tables, tables.xq_hi)
    dmono = _local_monomials(tables, tables.xq_hi, grads=True)
    phi_r = tables.phi_hi[:, :, :m_r]
    v0_vals = np.einsum("tci,tqi->tcq", u0, tables.phi_hi)

    gw = np.einsum("tij,tj->ti", maps.G, vloc)
    gw = gw.reshape(-1, 2, 2, m_r)
    lhs_g = np.einsum(
        "tq,tabq,tqj->tabj",
        tables.wq_hi, np.einsum("tabr,tqr->tabq", gw, phi_r), mono,
    )
    rhs_g = -np.einsum("tq,tcq,tqjb->tcbj", tables.wq_hi, v0_vals, dmono)

    dw = np.einsum("tij,tj->ti", maps.Wdiv, vloc)
    lhs_d = np.einsum(
        "tq,tq,tqj->tj",
        tables.wq_hi, np.einsum("tr,tqr->tq", dw, phi_r), mono,
    )
    rhs_d = -np.einsum("tq,tcq,tqjc->tj", tables.wq_hi, v0_vals, dmono)

    for le in range(3):
        e = msh.element_edges[:, le]
        vb = np.einsum("tcd,tqd->tcq", ub[e], tables.chi_hi[e])
        mono_e = _local_monomials(tables, tables.xe_hi[e])
        n = msh.normals[:, le]
        rhs_g += np.einsum("tq,tcq,tqj,tb->tcbj", tables.we_hi[e], vb, mono_e, n)
        rhs_d += np.einsum("tq,tcq,tqj,tc->tj", tables.we_hi[e], vb, mono_e, n)

    return max(
        float(np.max(np.abs(lhs_g - rhs_g))), float(np.max(np.abs(lhs_d - rhs_d)))
    )


def _check_superposition_and_duality(tables, lf, case, count, rng):
    msh = tables.mesh
    zero = lambda pts: np.zeros(np.asarray(pts).shape[:-1] + (2,))
    cond_f = reduction.condense_elements(lf, case.f)
    cond_0 = reduction.condense_elements(lf, zero)
    zero_w = np.zeros((msh.num_edges, 2, tables.d_e))
    zero_p = np.zeros((msh.num_elements, tables.m_r))
    affine = reduction.schur_operator(cond_f, zero_w, zero_p)
    interior = msh.interior_edges

    worst = 0.0
    for _ in range(count):
        wb = rng.standard_normal(zero_w.shape)
        qb = rng.standard_normal(zero_w.shape)
        wb[msh.boundary_mask] = 0.0
        qb[msh.boundary_mask] = 0.0
        p = rng.standard_normal(zero_p.shape)

        full = reduction.schur_operator(cond_f, wb, p)
        linear = reduction.schur_operator(cond_0, wb, p)
        worst = max(worst, float(np.max(np.abs(full - linear - affine))))

        lhs = float(np.sum(linear[interior] * qb[interior]))
        wb_loc = wb[msh.element_edges].reshape(msh.num_elements, -1)
        qb_loc = qb[msh.element_edges].reshape(msh.num_elements, -1)
        w_loc = np.concatenate(
            [reduction.lift_all(cond_0, wb_loc, p), wb_loc], axis=1
        )
        q_loc = np.concatenate(
            [reduction.lift_all(cond_0, qb_loc, p), qb_loc], axis=1
        )
        a = float(np.einsum("ti,tij,tj->", w_loc, lf.A, q_loc))
        b = float(np.einsum("tp,tpj,tj->", p, lf.B, q_loc))
        worst = max(worst, abs(lhs - (a - b)))
    return worst


def test_criterion_7_property_suites():
    rng = np.random.default_rng(2024)
    t0 = time.monotonic()
    msh2 = mesh_mod.build_uniform_square(2)
    tables2 = polybasis.build_tables(msh2, 1)
    lf2 = forms.assemble_local(tables2)
    msh4 = mesh_mod.build_uniform_square(4)
    tables4 = polybasis.build_tables(msh4, 1)
    lf4 = forms.assemble_local(tables4)
    case = analysis.make_case(1)

    results = []
    d = _check_commutativity(tables2, 200, rng)
    results.append(("commutativity, 200 fields", d, 1e-9))
    d = _check_energy_identity(tables4, lf4, 100, rng)
    results.append(("energy identity, 100 fields", d, 1e-10))
    d = _check_defining_identities(tables2, rng)
    results.append(("weak-operator defining identities", d, 1e-10))
    d = _check_superposition_and_duality(tables2, lf2, case, 50, rng)
    results.append(("interface superposition/duality, 50 inputs", d, 1e-9))

    zv = lambda pts: np.zeros(np.asarray(pts).shape[:-1] + (2,))
    zs = lambda pts: np.zeros(np.asarray(pts).shape[:-1])
    zero_case = analysis.ManufacturedCase(
        cid=0, name="zero", u=zv, p=zs, f=zv,
        grad_u=lambda pts: np.zeros(np.asarray(pts).shape[:-1] + (2, 2)),
        div_u=zs,
    )
    d = 0.0
    for method in ("wg", "hwg", "schur"):
        sol, _, _ = analysis.solve_on_mesh(zero_case, msh4, 1, method)
        d = max(
            d,
            float(np.max(np.abs(sol.u0))),
            float(np.max(np.abs(sol.ub))),
            float(np.max(np.abs(sol.p))),
        )
    results.append(("zero data -> zero solution, 3 schemes", d, 1e-10))

    hwg = systems.solve(systems.assemble_hwg(tables4, lf4, case.f, case.g))
    jumps = wc.jump_all(msh4, wc.gather_sides(msh4, hwg.ub_sides))
    d = float(np.max(np.abs(jumps[msh4.interior_edges])))
    results.append(("interface trace jump of the hybrid solve", d, 1e-8))

    elapsed = time.monotonic() - t0
    ok = elapsed < 30.0
    for name, defect, tol in results:
        sub_ok = defect <= tol
        ok &= sub_ok
        print(
            f"  property [{name}]: defect {defect:.3e} "
            f"(tol {tol:.0e}): {'PASS' if sub_ok else 'FAIL'}"
        )
    report(7, ok, f"six property suites in {elapsed:.1f}s (need <30s)")
    assert ok


def test_criterion_8_linear_patch():
    G = np.array([[0.7, 1.1], [0.4, -0.7]])  # trace-free: divergence zero
    shift = np.array([0.3, -0.2])
    patch = analysis.ManufacturedCase(
        cid=0,
        name="patch",
        u=lambda pts: np.asarray(pts) @ G.T + shift,
        p=lambda pts: np.zeros(np.asarray(pts).shape[:-1]),
        f=lambda pts: np.zeros(np.asarray(pts).shape[:-1] + (2,)),
        grad_u=lambda pts: np.broadcast_to(
            G, np.asarray(pts).shape[:-1] + (2, 2)
        ),
        div_u=lambda pts: np.zeros(np.asarray(pts).shape[:-1]),
    )
    msh = mesh_mod.build_uniform_square(4)
    tables = polybasis.build_tables(msh, 1)
    lf = forms.assemble_local(tables)
    worst = 0.0
    for method in ("wg", "hwg", "schur"):
        sol, _, _ = analysis.solve_on_mesh(patch, msh, 1, method)
        norms = analysis.error_norms(sol, patch, tables, lf)
        worst = max(worst, max(norms.values()))
    ok = worst <= 1e-9
    report(
        8, ok,
        f"divergence-free linear velocity, constant pressure: worst error "
        f"norm over 3 schemes {worst:.3e} (need <=1e-9)",
    )
    assert ok
