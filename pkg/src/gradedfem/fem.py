"""Lagrange P1/P2 elements: quadrature, stiffness and line-source assembly.

The load functional integrates a test function along the fracture
segments.  On meshes that conform to the fractures this is done edge by
edge; otherwise each fracture is clipped against the triangles and the
resulting sub-segments are integrated with a Gauss rule, every piece
assigned to exactly one triangle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateElement, UnsupportedDegree
from .geometry import Segment2, clip_segments_to_triangles
from .linalg import SparseSystem
from .mesh import Mesh

# 6-point triangle rule, exact for polynomials of degree 4.
_TRI_POINTS = np.array([
    [0.108103018168070, 0.445948490915965, 0.445948490915965],
    [0.445948490915965, 0.108103018168070, 0.445948490915965],
    [0.445948490915965, 0.445948490915965, 0.108103018168070],
    [0.816847572980459, 0.091576213509771, 0.091576213509771],
    [0.091576213509771, 0.816847572980459, 0.091576213509771],
    [0.091576213509771, 0.091576213509771, 0.816847572980459],
])
_TRI_WEIGHTS = 0.5 * np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)

# 3-point Gauss-Legendre on [0, 1], exact for degree 5.
_SEG_POINTS = np.array([0.5 - np.sqrt(0.6) / 2, 0.5, 0.5 + np.sqrt(0.6) / 2])
_SEG_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0


@dataclass(frozen=True)
class QuadratureRule:
    """Positive-weight rule; weights sum to the reference measure."""

    points: np.ndarray
    weights: np.ndarray


def triangle_rule() -> QuadratureRule:
    """Barycentric rule on the reference triangle (measure 1/2), degree 4."""
    return QuadratureRule(_TRI_POINTS.copy(), _TRI_WEIGHTS.copy())


def segment_rule() -> QuadratureRule:
    """Gauss rule on [0, 1], degree 5."""
    return QuadratureRule(_SEG_POINTS.copy(), _SEG_WEIGHTS.copy())


# ---------------------------------------------------------------------------
# shape functions
# ---------------------------------------------------------------------------

def local_dof_count(degree: int) -> int:
    if degree == 1:
        return 3
    if degree == 2:
        return 6
    raise UnsupportedDegree(f"element degree {degree} not in {{1, 2}}")


def _shape_batch(degree: int, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and barycentric gradients at lam (..., 3).

    Returns (N, dN) with N (..., n) and dN (..., n, 3).  P2 local order is
    the three vertices then the midpoints of edges (0,1), (1,2), (2,0).
    """
    lam = np.asarray(lam, dtype=float)
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    one = np.ones_like(l0)
    zero = np.zeros_like(l0)
    if degree == 1:
        N = np.stack([l0, l1, l2], axis=-1)
        dN = np.broadcast_to(np.eye(3), lam.shape[:-1] + (3, 3)).copy()
        return N, dN
    if degree == 2:
        N = np.stack([l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                      4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0], axis=-1)
        dN = np.stack([
            np.stack([4 * l0 - one, zero, zero], axis=-1),
            np.stack([zero, 4 * l1 - one, zero], axis=-1),
            np.stack([zero, zero, 4 * l2 - one], axis=-1),
            np.stack([4 * l1, 4 * l0, zero], axis=-1),
            np.stack([zero, 4 * l2, 4 * l1], axis=-1),
            np.stack([4 * l2, zero, 4 * l0], axis=-1),
        ], axis=-2)
        return N, dN
    raise UnsupportedDegree(f"element degree {degree} not in {{1, 2}}")


def shape_values_and_gradients(degree: int, barycentric) -> tuple[np.ndarray, np.ndarray]:
    """Shape values and reference-coordinate gradients at one point.

    The reference triangle is (0,0), (1,0), (0,1) with barycentric
    coordinates (1-x-y, x, y); returns (values (n,), gradients (n, 2)).
    """
    lam = np.asarray(barycentric, dtype=float)
    if lam.shape != (3,) or lam.min() < -1e-12 or abs(lam.sum() - 1.0) > 1e-12:
        raise ValueError(f"{barycentric!r} is not a barycentric point")
    N, dN = _shape_batch(degree, lam)
    # d(lambda)/d(x_ref) for the reference triangle
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return N, dN @ dlam


# ---------------------------------------------------------------------------
# degrees of freedom
# ---------------------------------------------------------------------------

@dataclass
class DofMap:
    """Global Lagrange dof numbering for one mesh.

    cell_dofs[t] lists the dofs of triangle t: its vertices for P1, the
    vertices followed by the edge midpoints (0,1), (1,2), (2,0) for P2.
    Edge dofs are shared across neighbouring triangles; boundary_dofs are
    the dofs whose support point lies on the domain boundary.
    """

    degree: int
    num_dofs: int
    cell_dofs: np.ndarray
    dof_coords: np.ndarray
    boundary_dofs: np.ndarray
    _edge_keys: np.ndarray | None = None
    _num_vertices: int = 0

    def edge_dof(self, i: int, j: int) -> int:
        """P2 midpoint dof of mesh edge {i, j}."""
        if self.degree != 2 or self._edge_keys is None:
            raise UnsupportedDegree("edge dofs exist only for degree 2")
        key = min(i, j) * self._num_vertices + max(i, j)
        pos = int(np.searchsorted(self._edge_keys, key))
        if pos >= len(self._edge_keys) or self._edge_keys[pos] != key:
            raise KeyError(f"({i}, {j}) is not a mesh edge")
        return self._num_vertices + pos


def build_dofmap(mesh: Mesh, degree: int) -> DofMap:
    if degree == 1:
        return DofMap(degree=1, num_dofs=mesh.num_vertices,
                      cell_dofs=mesh.triangles, dof_coords=mesh.vertices,
                      boundary_dofs=mesh.boundary_vertices,
                      _num_vertices=mesh.num_vertices)
    if degree != 2:
        raise UnsupportedDegree(f"element degree {degree} not in {{1, 2}}")
    nv = mesh.num_vertices
    edges = mesh.unique_edges()
    keys = edges[:, 0] * nv + edges[:, 1]
    tris = mesh.triangles
    tri_edge_keys = np.stack([
        np.minimum(tris[:, 0], tris[:, 1]) * nv + np.maximum(tris[:, 0], tris[:, 1]),
        np.minimum(tris[:, 1], tris[:, 2]) * nv + np.maximum(tris[:, 1], tris[:, 2]),
        np.minimum(tris[:, 2], tris[:, 0]) * nv + np.maximum(tris[:, 2], tris[:, 0]),
    ], axis=1)
    edge_dofs = nv + np.searchsorted(keys, tri_edge_keys)
    cell_dofs = np.hstack([tris, edge_dofs])
    coords = np.vstack([mesh.vertices,
                        0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])])
    boundary_edges = np.flatnonzero(mesh.edge_counts() == 1)
    boundary = np.concatenate([mesh.boundary_vertices, nv + boundary_edges])
    return DofMap(degree=2, num_dofs=nv + len(edges), cell_dofs=cell_dofs,
                  dof_coords=coords, boundary_dofs=np.unique(boundary),
                  _edge_keys=keys, _num_vertices=nv)


@dataclass
class FeFunction:
    """Coefficients of a Lagrange function on one mesh level."""

    mesh: Mesh
    dofmap: DofMap
    coefficients: np.ndarray


def interpolate(mesh: Mesh, dofmap: DofMap, fn: Callable) -> FeFunction:
    """Nodal interpolant of fn(x, y) (vectorized over coordinate arrays)."""
    coords = dofmap.dof_coords
    return FeFunction(mesh, dofmap, np.asarray(fn(coords[:, 0], coords[:, 1]), float))


# ---------------------------------------------------------------------------
# element geometry
# ---------------------------------------------------------------------------

def barycentric_gradients(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """(areas (T,), grad lambda (T, 3, 2)) for every triangle.

    Raises DegenerateElement when any triangle has non-positive area.
    """
    c = mesh.triangle_coords()
    e1 = c[:, 1] - c[:, 0]
    e2 = c[:, 2] - c[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if (det <= 0).any():
        raise DegenerateElement(
            f"triangle {int(np.argmin(det))} has non-positive Jacobian")
    gl = np.empty((mesh.num_triangles, 3, 2))
    gl[:, 1, 0] = e2[:, 1] / det
    gl[:, 1, 1] = -e2[:, 0] / det
    gl[:, 2, 0] = -e1[:, 1] / det
    gl[:, 2, 1] = e1[:, 0] / det
    gl[:, 0] = -gl[:, 1] - gl[:, 2]
    return 0.5 * det, gl


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble_stiffness(mesh: Mesh, dofmap: DofMap) -> SparseSystem:
    """Stiffness matrix of the gradient-gradient form, zero load vector.

    Boundary rows/columns are kept (eliminate with apply_dirichlet).  The
    accumulation is a deterministic sorted reduction, so entries are exact
    mirror images and repeated runs are bit-identical.
    """
    areas, gl = barycentric_gradients(mesh)
    rule = triangle_rule()
    _, dN = _shape_batch(dofmap.degree, rule.points)       # (q, n, 3)
    G = np.einsum("qik,tkd->tqid", dN, gl)                 # (T, q, n, 2)
    Ke = np.einsum("q,tqid,tqjd->tij", rule.weights, G, G) * (2.0 * areas)[:, None, None]
    n = dofmap.cell_dofs.shape[1]
    rows = np.repeat(dofmap.cell_dofs, n, axis=1).ravel()
    cols = np.tile(dofmap.cell_dofs, (1, n)).ravel()
    matrix = _csr_from_triplets(rows, cols, Ke.ravel(), dofmap.num_dofs)
    return SparseSystem(matrix=matrix, load=np.zeros(dofmap.num_dofs))


def _csr_from_triplets(rows, cols, vals, n) -> sp.csr_matrix:
    """COO to CSR with a stable sorted reduction (deterministic sums)."""
    order = np.lexsort((cols, rows))
    r = rows[order]
    c = cols[order]
    v = vals[order]
    key = r * n + c
    starts = np.concatenate([[0], np.flatnonzero(np.diff(key)) + 1])
    data = np.add.reduceat(v, starts)
    indices = c[starts]
    counts = np.bincount(r[starts], minlength=n)
    indptr = np.concatenate([[0], np.cumsum(counts)])
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def _segment_shape_values(degree: int, t: np.ndarray) -> np.ndarray:
    """Trace of the edge-supported basis along an edge, parametrized by t."""
    if degree == 1:
        return np.stack([1.0 - t, t], axis=-1)
    return np.stack([(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0),
                     4.0 * t * (1.0 - t)], axis=-1)


def assemble_line_load(mesh: Mesh, dofmap: DofMap, fractures: Sequence[Segment2],
                       method: str = "auto") -> np.ndarray:
    """Load vector b_i = integral of basis function i along the fractures.

    method 'conforming' walks the marked fracture edges; 'crossing' clips
    every fracture against the triangles and integrates the clipped
    pieces, each assigned to a single owning triangle; 'auto' picks
    'conforming' exactly when the mesh carries fracture edges.
    """
    if method == "auto":
        method = "conforming" if mesh.fracture_edges.size else "crossing"
    if method == "conforming":
        if mesh.fracture_edges.size == 0:
            raise ValueError("mesh has no fracture edges to integrate over")
        return _load_conforming(mesh, dofmap)
    if method == "crossing":
        return _load_crossing(mesh, dofmap, fractures)
    raise ValueError(f"unknown load assembly method {method!r}")


def _load_conforming(mesh: Mesh, dofmap: DofMap) -> np.ndarray:
    fe = mesh.fracture_edges
    pa = mesh.vertices[fe[:, 0]]
    pb = mesh.vertices[fe[:, 1]]
    lengths = np.linalg.norm(pb - pa, axis=1)
    rule = segment_rule()
    shape = _segment_shape_values(dofmap.degree, rule.points)   # (q, nloc)
    weights = rule.weights @ shape                              # (nloc,)
    b = np.zeros(dofmap.num_dofs)
    if dofmap.degree == 1:
        dofs = fe
    else:
        mids = np.array([dofmap.edge_dof(int(i), int(j)) for i, j in fe])
        dofs = np.column_stack([fe, mids])
    np.add.at(b, dofs.ravel(), (lengths[:, None] * weights[None, :]).ravel())
    return b


def _load_crossing(mesh: Mesh, dofmap: DofMap, fractures: Sequence[Segment2]) -> np.ndarray:
    b = np.zeros(dofmap.num_dofs)
    coords = mesh.triangle_coords()
    rule = segment_rule()
    for f in fractures:
        p = np.array([f.a.x, f.a.y])
        q = np.array([f.b.x, f.b.y])
        lo, hi, ok = clip_segments_to_triangles(p, q, coords)
        cand = np.flatnonzero(ok)
        if len(cand) == 0:
            continue
        bps = np.unique(np.clip(np.concatenate([[0.0, 1.0], lo[cand], hi[cand]]), 0, 1))
        t0 = bps[:-1]
        t1 = bps[1:]
        keep = t1 - t0 > 1e-13
        t0, t1 = t0[keep], t1[keep]
        mids = 0.5 * (t0 + t1)
        # owner = lowest-index candidate whose interval covers the midpoint
        covers = (lo[cand][None, :] <= mids[:, None] + 1e-14) \
            & (hi[cand][None, :] >= mids[:, None] - 1e-14)
        has_owner = covers.any(axis=1)
        owner = cand[np.argmax(covers, axis=1)][has_owner]
        t0, t1 = t0[has_owner], t1[has_owner]
        # Gauss points of every owned piece at once
        ts = t0[:, None] + (t1 - t0)[:, None] * rule.points[None, :]    # (M, q)
        pts = p[None, None, :] + ts[..., None] * (q - p)[None, None, :]
        p0 = coords[owner, 0]
        M = np.stack([coords[owner, 1] - p0, coords[owner, 2] - p0], axis=-1)
        xi = np.linalg.solve(M[:, None, :, :], (pts - p0[:, None, :])[..., None])[..., 0]
        lam = np.concatenate([1 - xi.sum(axis=-1, keepdims=True), xi], axis=-1)
        N, _ = _shape_batch(dofmap.degree, lam)                         # (M, q, nloc)
        seg_len = np.linalg.norm(q - p)
        w = (t1 - t0)[:, None] * seg_len * rule.weights[None, :]        # (M, q)
        contrib = np.einsum("mq,mqi->mi", w, N)
        np.add.at(b, dofmap.cell_dofs[owner].ravel(), contrib.ravel())
    return b


def apply_dirichlet(system: SparseSystem, boundary_dofs) -> SparseSystem:
    """Symmetric elimination of homogeneous Dirichlet dofs.

    Boundary rows and columns are zeroed, their diagonal entries set to 1
    and their load entries to 0; the result stays symmetric positive
    definite.  The input system is not modified.
    """
    A = system.matrix
    n = A.shape[0]
    bd = np.asarray(boundary_dofs, dtype=np.int64)
    keep = np.ones(n, dtype=bool)
    keep[bd] = False
    data = A.data.copy()
    row_of = np.repeat(np.arange(n), np.diff(A.indptr))
    data[~(keep[row_of] & keep[A.indices])] = 0.0
    for r in bd:
        lo, hi = A.indptr[r], A.indptr[r + 1]
        pos = lo + np.searchsorted(A.indices[lo:hi], r)
        if pos >= hi or A.indices[pos] != r:
            raise DegenerateElement(f"no diagonal entry stored for dof {r}")
        data[pos] = 1.0
    matrix = sp.csr_matrix((data, A.indices.copy(), A.indptr.copy()), shape=A.shape)
    load = system.load.copy()
    load[bd] = 0.0
    return SparseSystem(matrix=matrix, load=load)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def evaluate(f: FeFunction, triangle_index: int, barycentric) -> tuple[float, np.ndarray]:
    """Value and physical gradient of f at one point of one triangle."""
    lam = np.asarray(barycentric, dtype=float)
    _, gl = barycentric_gradients(f.mesh)
    N, dN = _shape_batch(f.dofmap.degree, lam)
    coeffs = f.coefficients[f.dofmap.cell_dofs[triangle_index]]
    grad = coeffs @ (dN @ gl[triangle_index])
    return float(coeffs @ N), grad


def gradients_on_triangles(f: FeFunction, tri_indices: np.ndarray, lam: np.ndarray,
                           gl: np.ndarray | None = None) -> np.ndarray:
    """Physical gradients of f on many triangles at once.

    lam is one barycentric point (3,) shared by all triangles, or (M, 3)
    with one point per entry of tri_indices; gl optionally passes
    precomputed barycentric gradients for f's mesh.
    """
    if gl is None:
        _, gl = barycentric_gradients(f.mesh)
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == 1:
        lam = np.broadcast_to(lam, (len(tri_indices), 3))
    _, dN = _shape_batch(f.dofmap.degree, lam)              # (M, n, 3)
    G = np.einsum("mik,mkd->mid", dN, gl[tri_indices])
    coeffs = f.coefficients[f.dofmap.cell_dofs[tri_indices]]
    return np.einsum("mi,mid->md", coeffs, G)
