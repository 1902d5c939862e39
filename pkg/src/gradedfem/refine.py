"""Graded refinement: one step splits every triangle into four.

New edge nodes sit at the midpoint, or at the fraction kappa of the edge
measured from a singular endpoint.  The node of a shared edge is created
once (keyed by the unordered vertex pair), so neighbours agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidMesh, KappaOutOfRange
from .mesh import Mesh, _edge_keys_of_triangles


@dataclass
class RefinementRecord:
    """How one refinement step placed its nodes.

    edges[e] is a sorted parent-level vertex pair; new_vertex[e] its node.
    ratio[e] is the placement fraction measured from source[e] (0.5 with
    source = edges[e, 0] when neither endpoint is singular, else kappa of
    the singular endpoint).  children[t] lists the four child triangle
    indices of parent t, child 0 at the singular corner when there is one
    and child 3 the central triangle.
    """

    edges: np.ndarray
    new_vertex: np.ndarray
    ratio: np.ndarray
    source: np.ndarray
    children: np.ndarray

    def edge_node(self, i: int, j: int) -> tuple[int, float, int]:
        """(new vertex, ratio, source vertex) for parent edge {i, j}."""
        key = (min(i, j), max(i, j))
        idx = np.searchsorted(self._keys, key[0] * self._nv + key[1])
        if idx >= len(self._keys) or self._keys[idx] != key[0] * self._nv + key[1]:
            raise KeyError(f"({i}, {j}) is not a parent edge")
        return int(self.new_vertex[idx]), float(self.ratio[idx]), int(self.source[idx])


def select_kappa(degree: int, point_kind: str, *, a: Optional[float] = None,
                 omega: Optional[float] = None, kappa: Optional[float] = None) -> float:
    """Grading parameter for a singular point.

    Fracture endpoints: kappa = 2^(-degree/a) for a grading exponent
    0 < a < 1 (always < 0.5).  Domain vertices: the supplied kappa is
    returned after checking kappa < 2^(-degree*omega/pi), where omega is
    the largest interior angle; kappa must also lie in (0, 0.5].
    """
    if point_kind == "fracture_endpoint":
        if a is None or not (0.0 < a < 1.0):
            raise KappaOutOfRange(f"grading exponent a={a} outside (0, 1)")
        return 2.0 ** (-degree / a)
    if point_kind == "domain_vertex":
        if kappa is None:
            raise KappaOutOfRange("domain vertices need an explicit kappa")
        if omega is None or not (0.0 < omega < 2.0 * math.pi):
            raise KappaOutOfRange(f"interior angle omega={omega} outside (0, 2*pi)")
        bound = 2.0 ** (-degree * omega / math.pi)
        if not (0.0 < kappa <= 0.5):
            raise KappaOutOfRange(f"kappa={kappa} outside (0, 0.5]")
        if kappa >= bound:
            raise KappaOutOfRange(
                f"kappa={kappa} violates kappa < 2^(-m*omega/pi) = {bound:.6g}")
        return kappa
    raise KappaOutOfRange(f"unknown point kind {point_kind!r}")


def graded_refine(mesh: Mesh) -> tuple[Mesh, RefinementRecord]:
    """One graded refinement step kappa(T).

    Each edge gets one new node (midpoint, or at kappa from its singular
    endpoint); each triangle is replaced by its three corner triangles and
    the central one.  Marks and fracture edges carry over to the children.
    """
    _check_refinable(mesh)
    tris = mesh.triangles
    nv = mesh.num_vertices
    ntri = mesh.num_triangles

    sing = np.zeros(nv, dtype=bool)
    kap = np.zeros(nv)
    for v, k in mesh.singular_vertices.items():
        sing[v] = True
        kap[v] = k

    # rotate local labels so a singular vertex, if any, is local vertex 0
    rot = np.zeros(ntri, dtype=np.int64)
    if mesh.singular_vertices:
        s = sing[tris]
        rot = np.where(s[:, 1], 1, np.where(s[:, 2], 2, 0))
    rows = np.arange(ntri)
    local = np.column_stack([tris[rows, rot], tris[rows, (rot + 1) % 3],
                             tris[rows, (rot + 2) % 3]])

    keys = _edge_keys_of_triangles(local, nv)
    ukeys, inv = np.unique(keys, return_inverse=True)
    ue = np.column_stack([ukeys // nv, ukeys % nv])
    i, j = ue[:, 0], ue[:, 1]
    if (sing[i] & sing[j]).any():
        raise InvalidMesh("an edge joins two singular vertices")
    ratio = np.where(sing[i], kap[i], np.where(sing[j], kap[j], 0.5))
    source = np.where(sing[j], j, i)
    target = np.where(sing[j], i, j)
    pa = mesh.vertices[source]
    pb = mesh.vertices[target]
    # exact midpoint when the ratio is 0.5, so uniform and kappa=0.5 grading
    # produce bit-identical coordinates
    new_coords = np.where((ratio == 0.5)[:, None], 0.5 * (pa + pb),
                          pa + ratio[:, None] * (pb - pa))
    new_index = nv + np.arange(len(ue))

    mid = new_index[inv].reshape(3, ntri).T  # nodes of edges (0,1), (1,2), (2,0)
    children = np.empty((4 * ntri, 3), np.int64)
    children[0::4] = np.column_stack([local[:, 0], mid[:, 0], mid[:, 2]])
    children[1::4] = np.column_stack([local[:, 1], mid[:, 1], mid[:, 0]])
    children[2::4] = np.column_stack([local[:, 2], mid[:, 2], mid[:, 1]])
    children[3::4] = mid
    parent = np.repeat(np.arange(ntri, dtype=np.int64), 4)

    new_boundary = _propagate_boundary(mesh, ue, new_index)
    new_fracture = _propagate_fracture_edges(mesh, ukeys, new_index, nv)

    refined = Mesh(np.vstack([mesh.vertices, new_coords]), children,
                   level=mesh.level + 1, parent_of_triangle=parent,
                   singular_vertices=mesh.singular_vertices,
                   boundary_vertices=new_boundary, fracture_edges=new_fracture)
    record = RefinementRecord(edges=ue, new_vertex=new_index, ratio=ratio,
                              source=source,
                              children=np.arange(4 * ntri).reshape(ntri, 4))
    record._keys = ukeys
    record._nv = nv
    return refined, record


def _check_refinable(mesh: Mesh) -> None:
    areas = mesh.signed_areas()
    if (areas <= 0).any():
        raise InvalidMesh(f"triangle {int(np.argmin(areas))} is not counterclockwise")
    if mesh.singular_vertices:
        sing = np.zeros(mesh.num_vertices, dtype=bool)
        sing[list(mesh.singular_vertices)] = True
        per_tri = sing[mesh.triangles].sum(axis=1)
        if (per_tri > 1).any():
            raise InvalidMesh(
                f"triangle {int(np.argmax(per_tri))} contains more than one "
                "singular vertex")


def _propagate_boundary(mesh: Mesh, unique_edges: np.ndarray,
                        new_index: np.ndarray) -> np.ndarray:
    boundary_edge_keys = _boundary_edge_keys(mesh)
    keys = unique_edges[:, 0] * mesh.num_vertices + unique_edges[:, 1]
    on_boundary = np.isin(keys, boundary_edge_keys)
    return np.concatenate([mesh.boundary_vertices, new_index[on_boundary]])


def _boundary_edge_keys(mesh: Mesh) -> np.ndarray:
    edges = mesh.unique_edges()
    counts = mesh.edge_counts()
    b = edges[counts == 1]
    return b[:, 0] * mesh.num_vertices + b[:, 1]


def _propagate_fracture_edges(mesh: Mesh, ukeys: np.ndarray,
                              new_index: np.ndarray, nv: int) -> np.ndarray | None:
    if mesh.fracture_edges.size == 0:
        return None
    fe = mesh.fracture_edges
    fkeys = fe[:, 0] * nv + fe[:, 1]
    pos = np.searchsorted(ukeys, fkeys)
    if (pos >= len(ukeys)).any() or (ukeys[np.minimum(pos, len(ukeys) - 1)] != fkeys).any():
        raise InvalidMesh("a fracture edge is not an edge of the mesh")
    node = new_index[pos]
    return np.vstack([np.column_stack([fe[:, 0], node]),
                      np.column_stack([node, fe[:, 1]])])
