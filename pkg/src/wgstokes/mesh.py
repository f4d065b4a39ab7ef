"""Triangular meshes of polygonal domains with edge connectivity.

Meshes are stored as flat numpy arrays and are immutable after
construction.  Edges are undirected vertex pairs (smaller vertex index
first) sorted lexicographically, so every mesh entity has a
deterministic global number and repeated runs produce identical
assemblies.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TriMesh:
    """Immutable triangulation with element/edge connectivity.

    Fields
    ------
    vertices : (V, 2) float array
    elements : (T, 3) int array, counterclockwise vertex triples
    edges : (E, 2) int array, vertex pairs with edges[e, 0] < edges[e, 1],
        rows sorted lexicographically
    element_edges : (T, 3) int array; local edge i joins local vertices
        (i+1) % 3 and (i+2) % 3 (edge i sits opposite vertex i)
    normals : (T, 3, 2) float array, outward unit normal per local edge
    edge_elements : (E, 2) int array (T1, T2); T1 < T2, T2 = -1 on the
        boundary
    edge_local : (E, 2) int array, local edge index of e inside T1 / T2
        (-1 where there is no T2)
    boundary_mask : (E,) bool array
    h_T : (T,) float array, element diameter (longest edge)
    h_e : (E,) float array, edge length
    areas : (T,) float array
    centroids : (T, 2) float array
    """

    vertices: np.ndarray
    elements: np.ndarray
    edges: np.ndarray
    element_edges: np.ndarray
    normals: np.ndarray
    edge_elements: np.ndarray
    edge_local: np.ndarray
    boundary_mask: np.ndarray
    h_T: np.ndarray
    h_e: np.ndarray
    areas: np.ndarray
    centroids: np.ndarray

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_elements(self):
        return self.elements.shape[0]

    @property
    def num_edges(self):
        return self.edges.shape[0]

    @property
    def interior_edges(self):
        return np.nonzero(~self.boundary_mask)[0]

    def element_coords(self, t):
        """Vertex coordinates of element t as a (3, 2) array."""
        return self.vertices[self.elements[t]]


def from_arrays(vertices, elements):
    """Build a TriMesh from raw vertex/element arrays.

    Clockwise triangles are reoriented; zero-area triangles are
    rejected.  Edge numbers, incidence, normals and size measures are
    derived here so every constructor shares one code path.
    """
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    elements = np.ascontiguousarray(elements, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise ValueError("vertices must be a (V, 2) array")
    if elements.ndim != 2 or elements.shape[1] != 3:
        raise ValueError("elements must be a (T, 3) array")
    if elements.min(initial=0) < 0 or elements.max(initial=-1) >= len(vertices):
        raise ValueError("element vertex index out of range")

    def cross_z(a, b):
        return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]

    p0, p1, p2 = (vertices[elements[:, i]] for i in range(3))
    twice_area = cross_z(p1 - p0, p2 - p0)
    if np.any(np.abs(twice_area) < 1e-14):
        raise ValueError("degenerate (zero-area) triangle in mesh")
    flip = twice_area < 0
    if np.any(flip):
        elements = elements.copy()
        elements[flip, 1], elements[flip, 2] = elements[flip, 2], elements[flip, 1]
        p1, p2 = vertices[elements[:, 1]], vertices[elements[:, 2]]
        twice_area = cross_z(p1 - p0, p2 - p0)
    areas = 0.5 * twice_area

    # local edge i = (v_{i+1}, v_{i+2}); undirected keys give global numbers
    T = len(elements)
    pairs = np.stack(
        [elements[:, [1, 2]], elements[:, [2, 0]], elements[:, [0, 1]]], axis=1
    ).reshape(-1, 2)
    keys = np.sort(pairs, axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    element_edges = inverse.reshape(T, 3).astype(np.int64)
    E = len(edges)

    # incidence: stable sort keeps element order, so T1 < T2 falls out
    flat = element_edges.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=E)
    if counts.max(initial=0) > 2 or counts.min(initial=1) < 1:
        raise ValueError("edge incident to more than two elements")
    first = np.searchsorted(flat[order], np.arange(E))
    edge_elements = np.full((E, 2), -1, dtype=np.int64)
    edge_local = np.full((E, 2), -1, dtype=np.int64)
    edge_elements[:, 0] = order[first] // 3
    edge_local[:, 0] = order[first] % 3
    two = counts == 2
    edge_elements[two, 1] = order[first[two] + 1] // 3
    edge_local[two, 1] = order[first[two] + 1] % 3
    boundary_mask = ~two

    h_e = np.linalg.norm(vertices[edges[:, 1]] - vertices[edges[:, 0]], axis=1)
    h_T = h_e[element_edges].max(axis=1)
    centroids = (p0 + p1 + p2) / 3.0

    # outward normal of local edge i: rotate its CCW-traversal tangent by -90
    corners = vertices[elements]  # (T, 3, 2)
    tang = np.roll(corners, -2, axis=1) - np.roll(corners, -1, axis=1)
    normals = np.stack([tang[:, :, 1], -tang[:, :, 0]], axis=2)
    normals /= np.linalg.norm(normals, axis=2, keepdims=True)

    mesh = TriMesh(
        vertices=vertices,
        elements=elements,
        edges=edges,
        element_edges=element_edges,
        normals=normals,
        edge_elements=edge_elements,
        edge_local=edge_local,
        boundary_mask=boundary_mask,
        h_T=h_T,
        h_e=h_e,
        areas=areas,
        centroids=centroids,
    )
    for arr in vars(mesh).values():
        arr.setflags(write=False)
    return mesh


def build_uniform_square(n):
    """Uniform triangulation of the unit square with 2*n^2 elements.

    Each of the n*n cells is split by the diagonal running from its
    bottom-left to its top-right corner.  Vertices are numbered row by
    row (lexicographic in (j, i)), elements cell by cell with the lower
    triangle before the upper one, which keeps every run reproducible.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be a positive integer")
    side = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(side, side)  # row j = y level
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper
    return from_arrays(vertices, elements)


def edge_sides(mesh, e):
    """Incident elements (T1, T2) of edge e; T2 is None on the boundary.

    T1 is always the incident element with the smaller global index,
    which pins down the orientation used by jumps and similarities.
    """
    t1, t2 = mesh.edge_elements[e]
    return (int(t1), None) if t2 < 0 else (int(t1), int(t2))


def read_mesh(path):
    """Read a mesh from a plain-text file.

    Format: first line "V E T" (counts), then V lines "x y", then T
    lines "i j k" with 0-based vertex indices.  Edges are derived
    internally; the stated edge count is cross-checked.
    """
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 3:
        raise ValueError(f"{path}: missing header")
    nv, ne, nt = (int(tok) for tok in tokens[:3])
    need = 3 + 2 * nv + 3 * nt
    if len(tokens) != need:
        raise ValueError(f"{path}: expected {need} tokens, found {len(tokens)}")
    vals = np.array(tokens[3 : 3 + 2 * nv], dtype=np.float64).reshape(nv, 2)
    tris = np.array(tokens[3 + 2 * nv :], dtype=np.int64).reshape(nt, 3)
    mesh = from_arrays(vals, tris)
    if mesh.num_edges != ne:
        raise ValueError(
            f"{path}: header says {ne} edges, derived {mesh.num_edges}"
        )
    return mesh
