"""Nested conforming triangulations with grading marks.

A Mesh is immutable after construction.  Vertex indices are stable across
refinement: level n+1 keeps the level-n vertices as a prefix, so marks
(singular vertices, fracture edges) propagate by index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    BrokenLineage,
    FractureNotRepresentable,
    InvalidMesh,
    KappaOutOfRange,
    SingularPointNotAVertex,
    TwoSingularPointsInOneTriangle,
)
from .geometry import Point2, Segment2, as_point

#: absolute tolerance (domain units) for matching configured points to vertices
POINT_MATCH_TOL = 1e-12

#: absolute tolerance for a vertex to count as lying on a fracture line
ON_FRACTURE_TOL = 1e-12


@dataclass
class ProblemSpec:
    """The continuous problem: domain, fractures and grading data.

    singular_points lists (point, kappa) pairs; it must contain every
    fracture endpoint.  kappa in (0, 0.5]; 0.5 reproduces uniform midpoint
    refinement at that point.
    """

    domain_polygon: np.ndarray
    fractures: list[Segment2]
    singular_points: list[tuple[Point2, float]]
    degree: int = 1
    refinements: int = 0

    def __post_init__(self) -> None:
        self.domain_polygon = np.asarray(self.domain_polygon, dtype=float)
        if self.domain_polygon.ndim != 2 or self.domain_polygon.shape[1] != 2 \
                or len(self.domain_polygon) < 3:
            raise InvalidMesh("domain_polygon must be an (N, 2) array with N >= 3")
        self.fractures = [
            f if isinstance(f, Segment2) else Segment2(as_point(f[0]), as_point(f[1]))
            for f in self.fractures
        ]
        self.singular_points = [(as_point(p), float(k)) for p, k in self.singular_points]
        for p, k in self.singular_points:
            if not (0.0 < k <= 0.5):
                raise KappaOutOfRange(f"kappa={k} at ({p.x}, {p.y}) outside (0, 0.5]")
        if self.degree not in (1, 2):
            raise InvalidMesh(f"unsupported element degree {self.degree}")
        if self.refinements < 0:
            raise InvalidMesh("refinements must be >= 0")
        for f in self.fractures:
            for endpoint in (f.a, f.b):
                if not any(_close(endpoint, p) for p, _ in self.singular_points):
                    raise InvalidMesh(
                        f"fracture endpoint ({endpoint.x}, {endpoint.y}) "
                        "missing from singular_points")


def _close(p: Point2, q: Point2, tol: float = POINT_MATCH_TOL) -> bool:
    return abs(p.x - q.x) <= tol and abs(p.y - q.y) <= tol


@dataclass(frozen=True)
class StructuredTemplate:
    """Tensor grid; every cell is split into 4 triangles through its center.

    Fractures must be unions of the resulting edges (cell sides, or cell
    diagonals running corner-to-corner through the center).
    """

    grid_x: tuple[float, ...]
    grid_y: tuple[float, ...]


@dataclass(frozen=True)
class UnionJackTemplate:
    """cells x cells square grid, one diagonal per cell, alternating so the
    diagonals form the Union-Jack pattern.

    row_shift moves the interior horizontal grid lines up by that amount
    (domain units).  With a shift whose offset relative to the cell height
    is non-dyadic, a horizontal fracture line keeps crossing element
    interiors on every refinement level.  No vertices are marked singular;
    refinement is uniform midpoint splitting.
    """

    cells: int
    row_shift: float = 0.0


@dataclass(frozen=True)
class FileTemplate:
    """Explicit level-0 mesh loaded from a text file (conforming meshes)."""

    path: Union[str, Path]


MeshTemplate = Union[StructuredTemplate, UnionJackTemplate, FileTemplate]


class Mesh:
    """A conforming triangulation with refinement lineage and marks.

    Attributes
    ----------
    vertices : (V, 2) float array (read-only)
    triangles : (T, 3) int array of CCW vertex triples (read-only)
    level : refinement count since the initial mesh
    parent_of_triangle : (T,) int array into the previous level, or None
    singular_vertices : dict vertex index -> grading parameter kappa
    boundary_vertices : (B,) sorted int array of vertices on the boundary
    fracture_edges : (K, 2) int array of sorted vertex pairs covering the
        fractures; empty for meshes that do not conform to them
    """

    def __init__(self, vertices, triangles, *, level=0, parent_of_triangle=None,
                 singular_vertices=None, boundary_vertices=None, fracture_edges=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise InvalidMesh("vertices must be (V, 2)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise InvalidMesh("triangles must be (T, 3)")
        if not np.isfinite(self.vertices).all():
            raise InvalidMesh("non-finite vertex coordinates")
        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= len(self.vertices)):
            raise InvalidMesh("triangle vertex index out of range")
        self.level = int(level)
        self.parent_of_triangle = (None if parent_of_triangle is None
                                   else np.ascontiguousarray(parent_of_triangle, np.int64))
        self.singular_vertices = dict(singular_vertices or {})
        self._edges = None
        self._edge_counts = None
        if boundary_vertices is None:
            boundary_vertices = _topological_boundary_vertices(self)
        self.boundary_vertices = np.unique(np.asarray(boundary_vertices, np.int64))
        if fracture_edges is None or len(fracture_edges) == 0:
            self.fracture_edges = np.empty((0, 2), np.int64)
        else:
            fe = np.sort(np.asarray(fracture_edges, np.int64).reshape(-1, 2), axis=1)
            self.fracture_edges = fe[np.lexsort((fe[:, 1], fe[:, 0]))]
        for arr in (self.vertices, self.triangles, self.fracture_edges,
                    self.boundary_vertices):
            arr.flags.writeable = False
        if self.parent_of_triangle is not None:
            self.parent_of_triangle.flags.writeable = False

    # -- basic queries ---------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def triangle_coords(self) -> np.ndarray:
        """(T, 3, 2) vertex coordinates per triangle."""
        return self.vertices[self.triangles]

    def signed_areas(self) -> np.ndarray:
        c = self.triangle_coords()
        e1 = c[:, 1] - c[:, 0]
        e2 = c[:, 2] - c[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def unique_edges(self) -> np.ndarray:
        """(E, 2) sorted vertex pairs, lexicographically ordered."""
        self._build_edges()
        return self._edges

    def edge_counts(self) -> np.ndarray:
        """Number of triangles sharing each edge of unique_edges()."""
        self._build_edges()
        return self._edge_counts

    def _build_edges(self) -> None:
        if self._edges is None:
            keys = _edge_keys_of_triangles(self.triangles, self.num_vertices)
            ukeys, counts = np.unique(keys, return_counts=True)
            self._edges = np.column_stack([ukeys // self.num_vertices,
                                           ukeys % self.num_vertices])
            self._edge_counts = counts

    def min_angle(self) -> float:
        """Smallest interior angle over all triangles, in radians."""
        c = self.triangle_coords()
        angles = []
        for k in range(3):
            u = c[:, (k + 1) % 3] - c[:, k]
            v = c[:, (k + 2) % 3] - c[:, k]
            cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
            dot = (u * v).sum(axis=1)
            angles.append(np.arctan2(np.abs(cross), dot))
        return float(np.min(angles))

    def __repr__(self) -> str:
        return (f"Mesh(level={self.level}, vertices={self.num_vertices}, "
                f"triangles={self.num_triangles})")


def _edge_keys_of_triangles(triangles: np.ndarray, num_vertices: int) -> np.ndarray:
    """Encoded sorted-pair keys of the 3T triangle edges (i*V + j, i < j)."""
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return e[:, 0] * num_vertices + e[:, 1]


def _topological_boundary_vertices(mesh: Mesh) -> np.ndarray:
    edges = mesh.unique_edges()
    counts = mesh.edge_counts()
    return np.unique(edges[counts == 1])


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class Violation:
    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


def validate(mesh: Mesh, spec: Optional[ProblemSpec] = None,
             geometric: Optional[bool] = None) -> list[Violation]:
    """Check every structural mesh invariant; returns [] when valid.

    geometric=None runs the O(E log V) hanging-node point scan only for
    meshes below 20k triangles; pass True/False to force it on or off.
    """
    out: list[Violation] = []
    if geometric is None:
        geometric = mesh.num_triangles <= 20_000

    areas = mesh.signed_areas()
    scale = max(float(np.abs(mesh.vertices).max(initial=1.0)), 1.0)
    bad = np.where(areas <= 1e-14 * scale * scale)[0]
    for t in bad[:10]:
        out.append(Violation("NotCounterClockwise",
                             f"triangle {t} has signed area {areas[t]:.3e}"))
    if len(bad) > 10:
        out.append(Violation("NotCounterClockwise", f"... and {len(bad)-10} more"))

    counts = mesh.edge_counts()
    over = np.where(counts > 2)[0]
    for e in over[:10]:
        i, j = mesh.unique_edges()[e]
        out.append(Violation("HangingNode", f"edge ({i}, {j}) shared by {counts[e]} triangles"))

    if geometric:
        out.extend(_geometric_conformity_violations(mesh))

    if mesh.singular_vertices:
        sing = np.zeros(mesh.num_vertices, dtype=bool)
        sing[list(mesh.singular_vertices)] = True
        per_tri = sing[mesh.triangles].sum(axis=1)
        for t in np.where(per_tri > 1)[0][:10]:
            out.append(Violation("TwoSingularPointsInOneTriangle",
                                 f"triangle {t} has {per_tri[t]} singular vertices"))
        for v, k in mesh.singular_vertices.items():
            if not (0.0 < k <= 0.5):
                out.append(Violation("KappaOutOfRange",
                                     f"vertex {v} has kappa={k} outside (0, 0.5]"))

    if spec is not None:
        for p, _ in spec.singular_points:
            if mesh.fracture_edges.size == 0 and not mesh.singular_vertices:
                break  # crossing meshes carry no marks to check against
            d = np.abs(mesh.vertices - [p.x, p.y]).max(axis=1)
            if d.min() > POINT_MATCH_TOL:
                out.append(Violation("SingularPointNotAVertex",
                                     f"({p.x}, {p.y}) is {d.min():.2e} from nearest vertex"))
        if mesh.fracture_edges.size:
            out.extend(_fracture_cover_violations(mesh, spec.fractures))

    if mesh.num_triangles % (4 ** mesh.level) != 0:
        out.append(Violation("WrongTriangleCount",
                             f"{mesh.num_triangles} triangles at level {mesh.level} "
                             f"is not a multiple of 4^{mesh.level}"))
    if mesh.parent_of_triangle is not None:
        par = mesh.parent_of_triangle
        if len(par) != mesh.num_triangles or (par.size and par.min() < 0):
            out.append(Violation("BrokenLineage", "parent array malformed"))

    topo = _topological_boundary_vertices(mesh)
    if not np.array_equal(topo, mesh.boundary_vertices):
        out.append(Violation("BoundaryMarkMismatch",
                             f"{len(mesh.boundary_vertices)} marked vs "
                             f"{len(topo)} topological boundary vertices"))
    return out


def _geometric_conformity_violations(mesh: Mesh) -> list[Violation]:
    """Duplicate-vertex and vertex-on-edge (T-junction) scan."""
    from scipy.spatial import cKDTree

    out: list[Violation] = []
    rounded = np.round(mesh.vertices, 12)
    _, first = np.unique(rounded, axis=0, return_index=True)
    if len(first) != mesh.num_vertices:
        out.append(Violation("HangingNode",
                             f"{mesh.num_vertices - len(first)} duplicated vertex coordinates"))
    tree = cKDTree(mesh.vertices)
    edges = mesh.unique_edges()
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    mid = 0.5 * (a + b)
    lengths = np.linalg.norm(b - a, axis=1)
    hits = tree.query_ball_point(mid, lengths / 2 + 1e-9)
    reported = 0
    for e, cand in enumerate(hits):
        cand = [v for v in cand if v not in (edges[e, 0], edges[e, 1])]
        if not cand:
            continue
        pa, d = a[e], b[e] - a[e]
        L = lengths[e]
        for v in cand:
            rel = mesh.vertices[v] - pa
            t = (rel @ d) / (L * L)
            off = abs(d[0] * rel[1] - d[1] * rel[0]) / L
            if off <= 1e-10 and 1e-10 < t < 1 - 1e-10:
                out.append(Violation("HangingNode",
                                     f"vertex {v} lies inside edge "
                                     f"({edges[e, 0]}, {edges[e, 1]})"))
                reported += 1
                if reported >= 10:
                    return out
    return out


def _fracture_cover_violations(mesh: Mesh, fractures: Sequence[Segment2]) -> list[Violation]:
    out = []
    edges = mesh.fracture_edges
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    assigned = np.zeros(len(edges), dtype=bool)
    for f in fractures:
        p = np.array([f.a.x, f.a.y])
        d = np.array([f.b.x - f.a.x, f.b.y - f.a.y])
        L = f.length
        dn = d / L
        offa = np.abs(dn[0] * (a[:, 1] - p[1]) - dn[1] * (a[:, 0] - p[0]))
        offb = np.abs(dn[0] * (b[:, 1] - p[1]) - dn[1] * (b[:, 0] - p[0]))
        ta = (a - p) @ dn
        tb = (b - p) @ dn
        on = ((offa <= ON_FRACTURE_TOL) & (offb <= ON_FRACTURE_TOL)
              & (np.minimum(ta, tb) >= -ON_FRACTURE_TOL)
              & (np.maximum(ta, tb) <= L + ON_FRACTURE_TOL))
        assigned |= on
        iv = np.sort(np.column_stack([np.minimum(ta, tb), np.maximum(ta, tb)])[on], axis=0)
        iv = iv[np.argsort(iv[:, 0])]
        pos = 0.0
        gapless = True
        for lo, hi in iv:
            if abs(lo - pos) > 1e-10:
                gapless = False
                break
            pos = hi
        if not (gapless and abs(pos - L) <= 1e-10):
            out.append(Violation("FractureCoverMismatch",
                                 f"fracture edges cover [0, {pos:.12g}] of a fracture "
                                 f"of length {L:.12g}"))
    if not assigned.all():
        out.append(Violation("FractureCoverMismatch",
                             f"{int((~assigned).sum())} marked fracture edges lie on "
                             "no configured fracture"))
    return out


# ---------------------------------------------------------------------------
# queries across levels
# ---------------------------------------------------------------------------

def barycentric_in_triangle(mesh: Mesh, triangle_index: int, point: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of a physical point in one triangle."""
    tri = mesh.triangles[triangle_index]
    p0 = mesh.vertices[tri[0]]
    M = np.column_stack([mesh.vertices[tri[1]] - p0, mesh.vertices[tri[2]] - p0])
    xi = np.linalg.solve(M, np.asarray(point, float) - p0)
    return np.array([1.0 - xi[0] - xi[1], xi[0], xi[1]])


def locate_in_ancestor(meshes: Sequence[Mesh], level_from: int, triangle_index: int,
                       barycentric, level_to: int) -> tuple[int, np.ndarray]:
    """Map a location on the level_from mesh to the containing coarse triangle.

    meshes[k] must be the level-k mesh of one refinement chain.  Returns
    (triangle index at level_to, barycentric coordinates there); the two
    locations describe the same physical point to 1e-12.
    """
    if not (0 <= level_to <= level_from < len(meshes)):
        raise BrokenLineage(f"levels {level_from}->{level_to} outside chain of "
                            f"length {len(meshes)}")
    fine = meshes[level_from]
    lam = np.asarray(barycentric, dtype=float)
    point = lam @ fine.vertices[fine.triangles[triangle_index]]
    t = int(triangle_index)
    for lev in range(level_from, level_to, -1):
        par = meshes[lev].parent_of_triangle
        if par is None:
            raise BrokenLineage(f"mesh at level {lev} has no parent links")
        t = int(par[t])
        if not (0 <= t < meshes[lev - 1].num_triangles):
            raise BrokenLineage(f"parent index {t} out of range at level {lev - 1}")
    lam_to = barycentric_in_triangle(meshes[level_to], t, point)
    if lam_to.min() < -1e-9:
        raise BrokenLineage(
            f"point {point} escapes ancestor triangle {t} at level {level_to} "
            f"(barycentric {lam_to})")
    return t, lam_to


def largest_interior_angle(spec: ProblemSpec) -> float:
    """Largest interior angle of the domain polygon, in radians."""
    poly = spec.domain_polygon
    n = len(poly)
    if _polygon_area(poly) <= 0:
        raise InvalidMesh("domain polygon must be counterclockwise")
    best = 0.0
    for i in range(n):
        e1 = poly[i] - poly[i - 1]
        e2 = poly[(i + 1) % n] - poly[i]
        turn = math.atan2(e1[0] * e2[1] - e1[1] * e2[0], e1 @ e2)
        best = max(best, math.pi - turn)
    return best


def _polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _point_strictly_inside(poly: np.ndarray, p: Point2) -> bool:
    # ray cast; boundary points count as outside
    x, y = p.x, p.y
    n = len(poly)
    inside = False
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        cross = dx * (y - y1) - dy * (x - x1)
        t = ((x - x1) * dx + (y - y1) * dy) / (dx * dx + dy * dy)
        if abs(cross) <= 1e-12 and -1e-12 <= t <= 1 + 1e-12:
            return False
        if (y1 > y) != (y2 > y):
            xs = x1 + (y - y1) / (y2 - y1) * dx
            if xs > x:
                inside = not inside
    return inside


# ---------------------------------------------------------------------------
# initial-mesh construction
# ---------------------------------------------------------------------------

def build_initial_mesh(spec: ProblemSpec, template: MeshTemplate) -> Mesh:
    """Construct the level-0 mesh for a problem from one of the templates.

    Conforming templates (structured, file) must cover every fracture with
    edges and carry every singular point as a vertex; the union-jack
    template builds a crossing mesh with no marks.
    """
    for f in spec.fractures:
        for endpoint in (f.a, f.b):
            if not _point_strictly_inside(spec.domain_polygon, endpoint):
                raise InvalidMesh(
                    f"fracture endpoint ({endpoint.x}, {endpoint.y}) must lie "
                    "strictly inside the domain")
    if isinstance(template, UnionJackTemplate):
        return _build_union_jack(spec, template)
    if isinstance(template, StructuredTemplate):
        verts, tris = _crisscross_grid(np.asarray(template.grid_x, float),
                                       np.asarray(template.grid_y, float))
        _require_rectangle_domain(spec, template.grid_x, template.grid_y)
        return _finish_conforming(spec, verts, tris)
    if isinstance(template, FileTemplate):
        mesh = read_mesh_file(template.path)
        return _finish_conforming(spec, np.array(mesh.vertices), np.array(mesh.triangles))
    raise InvalidMesh(f"unknown mesh template {template!r}")


def _require_rectangle_domain(spec, grid_x, grid_y) -> None:
    corners = {(grid_x[0], grid_y[0]), (grid_x[-1], grid_y[0]),
               (grid_x[-1], grid_y[-1]), (grid_x[0], grid_y[-1])}
    poly = {(float(x), float(y)) for x, y in spec.domain_polygon}
    if len(spec.domain_polygon) != 4 or poly != corners:
        raise InvalidMesh("structured template requires an axis-aligned rectangular "
                          "domain matching the grid extents")


def _crisscross_grid(xs: np.ndarray, ys: np.ndarray):
    if len(xs) < 2 or len(ys) < 2 or np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise InvalidMesh("grid lines must be strictly increasing with >= 2 entries")
    nx, ny = len(xs) - 1, len(ys) - 1
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    centers = np.column_stack([0.5 * (xs[ii] + xs[ii + 1]), 0.5 * (ys[jj] + ys[jj + 1])])
    verts = np.vstack([grid, centers])
    def gid(i, j):
        return i * (ny + 1) + j
    c = len(grid) + np.arange(nx * ny)
    v00, v10 = gid(ii, jj), gid(ii + 1, jj)
    v11, v01 = gid(ii + 1, jj + 1), gid(ii, jj + 1)
    tris = np.empty((4 * nx * ny, 3), np.int64)
    tris[0::4] = np.column_stack([v00, v10, c])
    tris[1::4] = np.column_stack([v10, v11, c])
    tris[2::4] = np.column_stack([v11, v01, c])
    tris[3::4] = np.column_stack([v01, v00, c])
    return verts, tris


def _build_union_jack(spec: ProblemSpec, template: UnionJackTemplate) -> Mesh:
    poly = spec.domain_polygon
    if len(poly) != 4:
        raise InvalidMesh("union-jack template requires a square domain")
    x0, y0 = poly.min(axis=0)
    x1, y1 = poly.max(axis=0)
    side = x1 - x0
    corners = {(x0, y0), (x1, y0), (x1, y1), (x0, y1)}
    if abs((y1 - y0) - side) > 1e-12 or {(float(x), float(y)) for x, y in poly} != corners:
        raise InvalidMesh("union-jack template requires an axis-aligned square domain")
    n = template.cells
    if n < 1:
        raise InvalidMesh("union-jack cell count must be >= 1")
    h = side / n
    if abs(template.row_shift) >= h:
        raise InvalidMesh(f"row_shift must be smaller than the cell height {h}")
    xs = x0 + side * np.arange(n + 1) / n
    ys = y0 + side * np.arange(n + 1) / n
    ys[1:-1] += template.row_shift
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([gx.ravel(), gy.ravel()])
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    def gid(i, j):
        return i * (n + 1) + j
    v00, v10 = gid(ii, jj), gid(ii + 1, jj)
    v11, v01 = gid(ii + 1, jj + 1), gid(ii, jj + 1)
    even = (ii + jj) % 2 == 0
    tris = np.empty((2 * n * n, 3), np.int64)
    tris[0::2] = np.where(even[:, None],
                          np.column_stack([v00, v10, v11]),
                          np.column_stack([v00, v10, v01]))
    tris[1::2] = np.where(even[:, None],
                          np.column_stack([v00, v11, v01]),
                          np.column_stack([v10, v11, v01]))
    return Mesh(verts, tris, level=0)


def _finish_conforming(spec: ProblemSpec, verts: np.ndarray, tris: np.ndarray) -> Mesh:
    """Match singular points, snap them, derive fracture edges, check marks."""
    verts = np.array(verts, dtype=float)
    singular: dict[int, float] = {}
    for p, kappa in spec.singular_points:
        d = np.abs(verts - [p.x, p.y]).max(axis=1)
        i = int(np.argmin(d))
        if d[i] > POINT_MATCH_TOL:
            raise SingularPointNotAVertex(
                f"singular point ({p.x}, {p.y}) is {d[i]:.3e} away from the "
                "nearest mesh vertex")
        verts[i] = [p.x, p.y]
        singular[i] = kappa

    sing_mask = np.zeros(len(verts), dtype=bool)
    sing_mask[list(singular)] = True
    per_tri = sing_mask[tris].sum(axis=1)
    if (per_tri > 1).any():
        t = int(np.argmax(per_tri))
        raise TwoSingularPointsInOneTriangle(
            f"triangle {t} (vertices {tris[t].tolist()}) contains "
            f"{per_tri[t]} singular points")

    fracture_edges = _derive_fracture_edges(verts, tris, spec.fractures)
    return Mesh(verts, tris, level=0, singular_vertices=singular,
                fracture_edges=fracture_edges)


def _derive_fracture_edges(verts, tris, fractures) -> np.ndarray:
    """Edges lying on the fractures; raises unless they cover each fracture."""
    if not fractures:
        return np.empty((0, 2), np.int64)
    V = len(verts)
    keys = np.unique(_edge_keys_of_triangles(np.asarray(tris, np.int64), V))
    edges = np.column_stack([keys // V, keys % V])
    a = verts[edges[:, 0]]
    b = verts[edges[:, 1]]
    chosen = []
    for f in fractures:
        p = np.array([f.a.x, f.a.y])
        L = f.length
        dn = np.array([f.b.x - f.a.x, f.b.y - f.a.y]) / L
        offa = np.abs(dn[0] * (a[:, 1] - p[1]) - dn[1] * (a[:, 0] - p[0]))
        offb = np.abs(dn[0] * (b[:, 1] - p[1]) - dn[1] * (b[:, 0] - p[0]))
        ta = (a - p) @ dn
        tb = (b - p) @ dn
        on = ((offa <= ON_FRACTURE_TOL) & (offb <= ON_FRACTURE_TOL)
              & (np.minimum(ta, tb) >= -ON_FRACTURE_TOL)
              & (np.maximum(ta, tb) <= L + ON_FRACTURE_TOL))
        iv = np.column_stack([np.minimum(ta, tb), np.maximum(ta, tb)])[on]
        order = np.argsort(iv[:, 0]) if len(iv) else []
        pos = 0.0
        for lo, hi in iv[order]:
            if abs(lo - pos) > 1e-10:
                break
            pos = hi
        if abs(pos - L) > 1e-10:
            raise FractureNotRepresentable(
                f"mesh edges cover only [0, {pos:.12g}] of the fracture from "
                f"({f.a.x}, {f.a.y}) to ({f.b.x}, {f.b.y}) of length {L:.12g}")
        chosen.append(edges[on])
    return np.vstack(chosen)


# ---------------------------------------------------------------------------
# text mesh files
# ---------------------------------------------------------------------------

def write_mesh_file(mesh: Mesh, path) -> None:
    """Write the text format: header, vertices, triangles, optional marks."""
    path = Path(path)
    lines = [f"vertices {mesh.num_vertices} triangles {mesh.num_triangles}"]
    for x, y in mesh.vertices:
        lines.append(f"{x:.17g} {y:.17g}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    for v in sorted(mesh.singular_vertices):
        lines.append(f"singular {v} {mesh.singular_vertices[v]:.17g}")
    for i, j in mesh.fracture_edges:
        lines.append(f"fracture_edge {i} {j}")
    path.write_text("\n".join(lines) + "\n")


def read_mesh_file(path) -> Mesh:
    """Read the text format written by write_mesh_file (level-0 semantics)."""
    path = Path(path)
    tokens = path.read_text().split("\n")
    tokens = [ln.strip() for ln in tokens if ln.strip() and not ln.lstrip().startswith("#")]
    if not tokens:
        raise InvalidMesh(f"{path}: empty mesh file")
    head = tokens[0].split()
    if len(head) != 4 or head[0] != "vertices" or head[2] != "triangles":
        raise InvalidMesh(f"{path}: bad header {tokens[0]!r}")
    nv, nt = int(head[1]), int(head[3])
    if len(tokens) < 1 + nv + nt:
        raise InvalidMesh(f"{path}: truncated file")
    verts = np.array([[float(w) for w in tokens[1 + i].split()] for i in range(nv)])
    tris = np.array([[int(w) for w in tokens[1 + nv + i].split()] for i in range(nt)],
                    dtype=np.int64)
    singular: dict[int, float] = {}
    fracture_edges = []
    for ln in tokens[1 + nv + nt:]:
        words = ln.split()
        if words[0] == "singular" and len(words) == 3:
            singular[int(words[1])] = float(words[2])
        elif words[0] == "fracture_edge" and len(words) == 3:
            fracture_edges.append((int(words[1]), int(words[2])))
        else:
            raise InvalidMesh(f"{path}: unrecognized trailing line {ln!r}")
    mesh = Mesh(verts, tris, level=0, singular_vertices=singular,
                fracture_edges=fracture_edges or None)
    areas = mesh.signed_areas()
    if (areas <= 0).any():
        raise InvalidMesh(f"{path}: triangle {int(np.argmin(areas))} is not counterclockwise")
    return mesh
