"""Polynomial bases and quadrature rules.

Every element and every edge carries its own L2-orthonormal scalar
basis, produced by modified Gram-Schmidt (in monomial coefficient
space) against the quadrature inner product.  Monomials are centered
at the element centroid / edge midpoint and scaled by the local
diameter, so conditioning does not degrade on fine meshes.  The graded
monomial order makes bases nested: the first dim P_{k-1} functions of
a degree-k element basis span P_{k-1}.

Orthonormality turns all local mass matrices downstream into identity
matrices; projections reduce to moment integrals.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Duffy-style rules are generated, not tabulated, so the cap below is
# generous; it only guards against nonsense requests.
MAX_TRIANGLE_EXACTNESS = 40

PIVOT_TOL = 1e-13


@dataclass(frozen=True)
class QuadRule:
    """Quadrature nodes and weights on a reference domain.

    points : (m, 2) array on the reference triangle {x,y >= 0, x+y <= 1},
        or (m,) array on [0, 1] for edge rules
    weights : (m,) array; sums to the reference measure (1/2 or 1)
    exactness : largest polynomial degree integrated exactly
    """

    points: np.ndarray
    weights: np.ndarray
    exactness: int


@lru_cache(maxsize=None)
def triangle_quadrature(exactness):
    """Positive-weight rule on the reference triangle.

    Built as a collapsed (Duffy) tensor Gauss-Legendre rule: with
    x = xi*(1-eta), y = eta the extra Jacobian factor (1-eta) is
    polynomial, so choosing ceil((d+1)/2) points in xi and
    ceil((d+2)/2) in eta integrates every monomial of total degree <= d
    exactly.  Exact for any triangle via affine mapping.
    """
    if not isinstance(exactness, (int, np.integer)) or exactness < 0:
        raise ValueError("exactness must be a nonnegative integer")
    if exactness > MAX_TRIANGLE_EXACTNESS:
        raise ValueError(
            f"triangle exactness capped at {MAX_TRIANGLE_EXACTNESS}"
        )
    m_xi = (exactness + 2) // 2
    m_eta = (exactness + 3) // 2
    xi, wxi = _gauss01(max(m_xi, 1))
    eta, weta = _gauss01(max(m_eta, 1))
    XI, ETA = np.meshgrid(xi, eta, indexing="ij")
    x = (XI * (1.0 - ETA)).ravel()
    y = ETA.ravel()
    w = (np.outer(wxi, weta) * (1.0 - ETA)).ravel()
    pts = np.column_stack([x, y])
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(points=pts, weights=w, exactness=int(exactness))


@lru_cache(maxsize=None)
def edge_quadrature(npoints):
    """Gauss-Legendre rule on [0, 1], exact to degree 2*npoints - 1."""
    if npoints < 1:
        raise ValueError("need at least one point")
    t, w = _gauss01(npoints)
    t.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(points=t, weights=w, exactness=2 * npoints - 1)


def _gauss01(m):
    x, w = np.polynomial.legendre.leggauss(m)
    return (x + 1.0) / 2.0, w / 2.0


def mono_exponents(k):
    """Graded bivariate monomial exponents up to total degree k."""
    return np.array(
        [(d - b, b) for d in range(k + 1) for b in range(d + 1)], dtype=np.int64
    )


def eval_monomials(points, exps):
    """Evaluate x^a * y^b for each exponent pair at points (..., 2)."""
    x = points[..., 0:1]
    y = points[..., 1:2]
    return x ** exps[:, 0] * y ** exps[:, 1]


def eval_monomial_grads(points, exps):
    """Gradients of the monomials, shape (..., m, 2)."""
    x = points[..., 0:1]
    y = points[..., 1:2]
    a = exps[:, 0]
    b = exps[:, 1]
    dx = np.where(a > 0, a * x ** np.maximum(a - 1, 0) * y ** b, 0.0)
    dy = np.where(b > 0, b * x ** a * y ** np.maximum(b - 1, 0), 0.0)
    return np.stack([dx, dy], axis=-1)


def orthonormalize(values, weights):
    """Modified Gram-Schmidt against the quadrature inner product.

    Parameters
    ----------
    values : (..., q, m) array
        Raw basis sampled at quadrature points; leading axes batch over
        elements or edges.
    weights : (..., q) array
        Physical quadrature weights (area or length measure).

    Returns
    -------
    coeff : (..., m, m) array, lower triangular
        Row i holds the expansion of orthonormal function i in the raw
        basis.
    ortho : (..., q, m) array
        The orthonormalized functions sampled at the same points.

    Raises
    ------
    ValueError
        If any pivot norm falls below PIVOT_TOL (near-linear-dependent
        raw basis, e.g. a degenerate element).
    """
    ortho = np.array(values, dtype=np.float64)
    batch = ortho.shape[:-2]
    m = ortho.shape[-1]
    coeff = np.zeros(batch + (m, m))
    coeff[...] = np.eye(m)
    for i in range(m):
        for j in range(i):
            r = np.einsum("...q,...q->...", weights * ortho[..., j], ortho[..., i])
            ortho[..., i] -= r[..., None] * ortho[..., j]
            coeff[..., i, :] -= r[..., None] * coeff[..., j, :]
        nrm = np.sqrt(
            np.einsum("...q,...q->...", weights * ortho[..., i], ortho[..., i])
        )
        if np.any(nrm < PIVOT_TOL):
            raise ValueError(
                f"near-linear-dependent basis: pivot {nrm.min():.3e} at column {i}"
            )
        ortho[..., i] /= nrm[..., None]
        coeff[..., i, :] /= nrm[..., None]
    return coeff, ortho


@dataclass(frozen=True)
class ElementBasis:
    """Orthonormal scalar P_k basis on every element of a mesh.

    coeff[t] maps centered/scaled monomials to the orthonormal basis;
    row i of coeff[t] is function i.  Nested: the leading k*(k+1)/2
    functions form an orthonormal P_{k-1} basis.
    """

    k: int
    exps: np.ndarray
    centers: np.ndarray
    scales: np.ndarray
    coeff: np.ndarray

    @property
    def dim(self):
        return self.coeff.shape[-1]

    def _local(self, points):
        return (points - self.centers[:, None, :]) / self.scales[:, None, None]

    def tabulate(self, points):
        """Basis values at physical points (T, q, 2) -> (T, q, dim)."""
        mono = eval_monomials(self._local(points), self.exps)
        return np.einsum("tij,tqj->tqi", self.coeff, mono)

    def tabulate_grad(self, points):
        """Basis gradients at physical points -> (T, q, dim, 2)."""
        dmono = eval_monomial_grads(self._local(points), self.exps)
        grad = np.einsum("tij,tqjd->tqid", self.coeff, dmono)
        return grad / self.scales[:, None, None, None]


@dataclass(frozen=True)
class EdgeBasis:
    """Orthonormal scalar P_{k-1} basis on every edge.

    Edges are parametrized globally from the smaller-index vertex to
    the larger, so both elements sharing an edge see identical basis
    functions (required for single-valued interface unknowns).
    """

    degree: int
    coeff: np.ndarray

    @property
    def dim(self):
        return self.coeff.shape[-1]

    def tabulate(self, tpoints):
        """Basis values at parameter values (q,) -> (E, q, dim)."""
        mono = (tpoints[:, None] - 0.5) ** np.arange(self.dim)
        return np.einsum("eij,qj->eqi", self.coeff, mono)


def element_basis(mesh, k, rule):
    """Build the per-element orthonormal P_k basis under `rule`."""
    xq, wq = map_rule_to_elements(mesh, rule)
    exps = mono_exponents(k)
    local = (xq - mesh.centroids[:, None, :]) / mesh.h_T[:, None, None]
    mono = eval_monomials(local, exps)
    coeff, _ = orthonormalize(mono, wq)
    return ElementBasis(
        k=k, exps=exps, centers=mesh.centroids, scales=mesh.h_T, coeff=coeff
    )


def edge_basis(mesh, k, rule):
    """Build the per-edge orthonormal P_{k-1} basis under `rule`."""
    mono = (rule.points[:, None] - 0.5) ** np.arange(k)
    values = np.broadcast_to(mono, (mesh.num_edges,) + mono.shape)
    weights = mesh.h_e[:, None] * rule.weights
    coeff, _ = orthonormalize(values, weights)
    return EdgeBasis(degree=k - 1, coeff=coeff)


def map_rule_to_elements(mesh, rule):
    """Physical points (T, q, 2) and weights (T, q) of a triangle rule."""
    p0 = mesh.vertices[mesh.elements[:, 0]][:, None, :]
    p1 = mesh.vertices[mesh.elements[:, 1]][:, None, :]
    p2 = mesh.vertices[mesh.elements[:, 2]][:, None, :]
    xi = rule.points[:, 0][None, :, None]
    eta = rule.points[:, 1][None, :, None]
    xq = p0 + xi * (p1 - p0) + eta * (p2 - p0)
    wq = 2.0 * mesh.areas[:, None] * rule.weights[None, :]
    return xq, wq


def map_rule_to_edges(mesh, rule):
    """Physical points (E, q, 2) and weights (E, q) of an edge rule."""
    va = mesh.vertices[mesh.edges[:, 0]][:, None, :]
    vb = mesh.vertices[mesh.edges[:, 1]][:, None, :]
    t = rule.points[None, :, None]
    xe = va + t * (vb - va)
    we = mesh.h_e[:, None] * rule.weights[None, :]
    return xe, we


@dataclass(frozen=True)
class MeshTables:
    """All basis/quadrature tables one mesh + degree pair needs.

    The "form" rules are sized for polynomial integrands of the
    bilinear forms (element exactness 2k+2, edge rules with k+2 Gauss
    points); the "hi" rules oversample for non-polynomial data so that
    quadrature error stays below discretization error.
    """

    mesh: object
    k: int
    m_k: int
    m_r: int
    d_e: int
    elem: ElementBasis
    edge: EdgeBasis
    xq: np.ndarray
    wq: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    t_edge: np.ndarray
    xe: np.ndarray
    we: np.ndarray
    chi: np.ndarray
    phi_tr: np.ndarray
    xq_hi: np.ndarray
    wq_hi: np.ndarray
    phi_hi: np.ndarray
    xe_hi: np.ndarray
    we_hi: np.ndarray
    chi_hi: np.ndarray

    @property
    def n_loc(self):
        """Local velocity DOF count: 2 interior blocks + 3 edge blocks."""
        return 2 * self.m_k + 6 * self.d_e


def build_tables(mesh, k, data_exactness=10):
    """Construct MeshTables for a mesh and polynomial degree k >= 1."""
    if k < 1:
        raise ValueError("degree k must be >= 1")
    m_k = (k + 1) * (k + 2) // 2
    m_r = k * (k + 1) // 2

    rule = triangle_quadrature(2 * k + 2)
    hi = triangle_quadrature(max(2 * k + 2, data_exactness))
    erule = edge_quadrature(k + 2)
    ehi = edge_quadrature(max(k + 2, 10))

    elem = element_basis(mesh, k, rule)
    edge = edge_basis(mesh, k, erule)

    xq, wq = map_rule_to_elements(mesh, rule)
    phi = elem.tabulate(xq)
    dphi = elem.tabulate_grad(xq)

    xe, we = map_rule_to_edges(mesh, erule)
    chi = edge.tabulate(erule.points)
    # traces of the element basis on its own three edges, at the edge
    # rule's global parametrization (both sides sample identical points)
    tr_pts = xe[mesh.element_edges].reshape(mesh.num_elements, -1, 2)
    phi_tr = elem.tabulate(tr_pts).reshape(
        mesh.num_elements, 3, len(erule.points), m_k
    )

    xq_hi, wq_hi = map_rule_to_elements(mesh, hi)
    phi_hi = elem.tabulate(xq_hi)
    xe_hi, we_hi = map_rule_to_edges(mesh, ehi)
    chi_hi = edge.tabulate(ehi.points)

    tabs = MeshTables(
        mesh=mesh, k=k, m_k=m_k, m_r=m_r, d_e=k, elem=elem, edge=edge,
        xq=xq, wq=wq, phi=phi, dphi=dphi,
        t_edge=erule.points, xe=xe, we=we, chi=chi, phi_tr=phi_tr,
        xq_hi=xq_hi, wq_hi=wq_hi, phi_hi=phi_hi,
        xe_hi=xe_hi, we_hi=we_hi, chi_hi=chi_hi,
    )
    for arr in vars(tabs).values():
        if isinstance(arr, np.ndarray):
            arr.setflags(write=False)
    return tabs
