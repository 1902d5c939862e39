#!/usr/bin/env python3
"""Regenerate the level-0 mesh fixtures in meshes/.

The reference figures in the source experiments show the initial meshes
only as pictures, so these files are documented reconstructions: tensor
criss-cross grids whose lines pass through the fracture endpoints, plus a
hand-built conforming mesh for the triangle domain.  Fixture geometry is
committed; rerun this script only when a reconstruction changes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from gradedfem.mesh import Mesh, _crisscross_grid, write_mesh_file

MESH_DIR = Path(__file__).resolve().parent.parent / "meshes"


def crisscross(xs, ys) -> Mesh:
    verts, tris = _crisscross_grid(np.asarray(xs, float), np.asarray(ys, float))
    return Mesh(verts, tris)


def triangle_domain_mesh() -> Mesh:
    """Conforming mesh for the triangle (0,0)-(1,0)-(0.5,1) with a fracture
    on y = 0.25 from x = 0.3 to x = 0.7.

    The fracture line is extended to the domain edges at (0.125, 0.25) and
    (0.875, 0.25); the lower trapezoid is split into four quads (criss-cross
    through their centroids) and the upper triangle is subdivided once with
    its base split at the fracture endpoints.
    """
    A, B, C = (0.0, 0.0), (1.0, 0.0), (0.5, 1.0)
    D1, D2, D3 = (0.3, 0.0), (0.5, 0.0), (0.7, 0.0)
    L, Q1, M = (0.125, 0.25), (0.3, 0.25), (0.5, 0.25)
    Q2, R = (0.7, 0.25), (0.875, 0.25)
    X1, X2 = (0.3125, 0.625), (0.6875, 0.625)
    points = [A, B, C, D1, D2, D3, L, Q1, M, Q2, R, X1, X2]
    index = {p: i for i, p in enumerate(points)}
    verts = [list(p) for p in points]
    tris: list[tuple[int, int, int]] = []

    def quad(a, b, c, d):
        g = len(verts)
        verts.append(list(np.mean([a, b, c, d], axis=0)))
        for u, v in ((a, b), (b, c), (c, d), (d, a)):
            tris.append((index[u], index[v], g))

    quad(A, D1, Q1, L)
    quad(D1, D2, M, Q1)
    quad(D2, D3, Q2, M)
    quad(D3, B, R, Q2)
    for a, b, c in ((L, Q1, X1), (Q1, M, X1), (M, Q2, X2),
                    (Q2, R, X2), (M, X2, X1), (X1, X2, C)):
        tris.append((index[a], index[b], index[c]))
    return Mesh(np.array(verts), np.array(tris, dtype=np.int64))


FIXTURES = {
    # unit square, fracture (0.25,0.5)-(0.75,0.5); 64 elements
    "square_fracture_64.mesh": lambda: crisscross(
        [0, 0.25, 0.5, 0.75, 1], [0, 0.25, 0.5, 0.75, 1]),
    # unit square, longer fracture (0.1,0.5)-(0.9,0.5); 96 elements
    "square_longfracture_96.mesh": lambda: crisscross(
        [0, 0.1, 0.3, 0.5, 0.7, 0.9, 1], [0, 0.25, 0.5, 0.75, 1]),
    # unit square, diagonal fracture (0.2,0.2)-(0.8,0.8); 64 elements
    "square_diagfracture_64.mesh": lambda: crisscross(
        [0, 0.2, 0.5, 0.8, 1], [0, 0.2, 0.5, 0.8, 1]),
    # unit square, fractures (0.3,0.1)-(0.3,0.9) and (0.6,0.1)-(0.9,0.9);
    # cells along the second fracture have the matching 3:8 aspect so its
    # pieces run corner-to-corner; 96 elements
    "square_twofracture_96.mesh": lambda: crisscross(
        [0, 0.3, 0.45, 0.6, 0.75, 0.9, 1], [0, 0.1, 0.5, 0.9, 1]),
    # triangle domain, fracture (0.3,0.25)-(0.7,0.25); 22 elements
    "triangle_fracture_22.mesh": triangle_domain_mesh,
}


def main() -> None:
    MESH_DIR.mkdir(exist_ok=True)
    for name, make in FIXTURES.items():
        mesh = make()
        write_mesh_file(mesh, MESH_DIR / name)
        print(f"{name}: {mesh.num_vertices} vertices, {mesh.num_triangles} triangles")


if __name__ == "__main__":
    main()
