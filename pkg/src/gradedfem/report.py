"""File outputs for studies: legacy VTK dumps and matplotlib figures.

Figures are rendered straight to image files (no interactive backend);
solution dumps use the plain-text unstructured-grid format readable by
common visualization tools.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .mesh import Mesh  # noqa: E402


def write_solution_dump(path, mesh: Mesh, vertex_values: np.ndarray,
                        name: str = "u") -> None:
    """Legacy-format unstructured grid with one point scalar field."""
    values = np.asarray(vertex_values, dtype=float)
    if values.shape != (mesh.num_vertices,):
        raise ValueError(f"expected {mesh.num_vertices} vertex values, "
                         f"got shape {values.shape}")
    lines = [
        "# vtk DataFile Version 2.0",
        "gradedfem solution",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.num_vertices} double",
    ]
    lines += [f"{x:.12e} {y:.12e} 0.0" for x, y in mesh.vertices]
    lines.append(f"CELLS {mesh.num_triangles} {4 * mesh.num_triangles}")
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"CELL_TYPES {mesh.num_triangles}")
    lines += ["5"] * mesh.num_triangles
    lines.append(f"POINT_DATA {mesh.num_vertices}")
    lines.append(f"SCALARS {name} double 1")
    lines.append("LOOKUP_TABLE default")
    lines += [f"{v:.12e}" for v in values]
    Path(path).write_text("\n".join(lines) + "\n")


def _draw_fractures(ax, fractures) -> None:
    for f in fractures or []:
        ax.plot([f.a.x, f.b.x], [f.a.y, f.b.y], color="crimson", lw=2.0, zorder=3)


def save_mesh_figure(mesh: Mesh, path, fractures=None, title: str | None = None) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.triplot(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles,
               color="0.35", lw=0.5)
    _draw_fractures(ax, fractures)
    if mesh.singular_vertices:
        pts = mesh.vertices[list(mesh.singular_vertices)]
        ax.plot(pts[:, 0], pts[:, 1], "o", color="crimson", ms=5, zorder=4)
    ax.set_aspect("equal")
    ax.set_title(title or f"mesh level {mesh.level}: {mesh.num_triangles} elements")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_solution_figure(mesh: Mesh, vertex_values: np.ndarray, path,
                         fractures=None, title: str | None = None) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 5))
    tpc = ax.tripcolor(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles,
                       np.asarray(vertex_values, float), shading="gouraud",
                       cmap="viridis")
    fig.colorbar(tpc, ax=ax, shrink=0.85)
    _draw_fractures(ax, fractures)
    ax.set_aspect("equal")
    ax.set_title(title or f"solution, level {mesh.level}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_convergence_figure(report, path) -> None:
    """Seminorm differences per level with the ideal-slope reference line."""
    levels = [r.level for r in report.records if r.h1_diff is not None]
    diffs = [r.h1_diff for r in report.records if r.h1_diff is not None]
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    ax.semilogy(levels, diffs, "o-", label="nested difference")
    if diffs:
        m = report.degree
        ref = [diffs[0] * 2.0 ** (-m * (l - levels[0])) for l in levels]
        ax.semilogy(levels, ref, "k--", lw=1, label=f"slope $2^{{-{m}j}}$")
    for j, e in sorted(report.rates.items()):
        ax.annotate(f"{e:.2f}", (j, dict(zip(levels, diffs))[j]),
                    textcoords="offset points", xytext=(6, 4), fontsize=8)
    ax.set_xlabel("refinement level $j$")
    ax.set_ylabel(r"$|u_j - u_{j-1}|_{H^1}$")
    ax.legend()
    ax.grid(True, which="both", ls=":", lw=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
