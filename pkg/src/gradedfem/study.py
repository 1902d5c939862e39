"""Convergence-study harness over a chain of graded refinements.

Because no closed-form solution exists, convergence is measured through
seminorm differences of solutions on consecutive nested levels: the rate
at level j compares |u_j - u_{j-1}| with |u_{j+1} - u_j| on a log2 scale,
so a degree-m method at its optimal rate reports values near m.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonpositiveDifference, NotNested
from .fem import (
    FeFunction,
    _shape_batch,
    apply_dirichlet,
    assemble_line_load,
    assemble_stiffness,
    barycentric_gradients,
    build_dofmap,
    triangle_rule,
)
from .linalg import SolveReport, cg_solve
from .mesh import Mesh, MeshTemplate, ProblemSpec, build_initial_mesh
from .refine import graded_refine


@dataclass
class LevelRecord:
    """Per-level outcome of a study.

    dofs counts the unconstrained (interior) unknowns; h1_diff is the
    gradient-norm distance to the previous level (None at level 0).
    load_total and residual_inf are assembly/solver diagnostics kept for
    the verification suite; they do not appear in the CSV.
    """

    level: int
    dofs: int
    triangles: int
    solve: SolveReport
    h1_diff: Optional[float]
    load_total: float = 0.0
    residual_inf: float = 0.0


@dataclass
class StudyReport:
    """Study outcome: level records, rates e_j, and the configuration echo.

    rates[j] uses the solutions at levels j-1, j and j+1, matching the
    column indexing of the reference tables; it exists for 1 <= j <= n-1.
    """

    records: list[LevelRecord]
    rates: dict[int, float]
    degree: int
    template_label: str
    kappas: list[tuple[tuple[float, float], float]]
    meshes: list[Mesh] = field(default_factory=list, repr=False)
    solutions: list[FeFunction] = field(default_factory=list, repr=False)


def rate(d_prev: float, d_next: float) -> float:
    """log2 of the ratio of consecutive seminorm differences."""
    if not (d_prev > 0.0 and d_next > 0.0):
        raise NonpositiveDifference(f"differences ({d_prev}, {d_next}) must be positive")
    return math.log2(d_prev / d_next)


def h1_seminorm_diff(fine: FeFunction, coarse: FeFunction) -> float:
    """Gradient-norm distance |u_fine - u_coarse| over the domain.

    coarse must live on the parent level of fine's mesh.  The coarse
    gradient is evaluated on each fine element through its parent, where
    both gradients are polynomial, so the degree-4 quadrature is exact.
    """
    fm, cm = fine.mesh, coarse.mesh
    if fm.parent_of_triangle is None:
        raise NotNested("fine mesh has no parent links")
    if fm.level != cm.level + 1 or fm.parent_of_triangle.max(initial=0) >= cm.num_triangles:
        raise NotNested(
            f"meshes at levels {fm.level} and {cm.level} are not consecutive")
    if fine.dofmap.degree != coarse.dofmap.degree:
        raise NotNested("functions have different element degrees")
    degree = fine.dofmap.degree
    parent = fm.parent_of_triangle

    areas_f, gl_f = barycentric_gradients(fm)
    _, gl_c = barycentric_gradients(cm)
    ccoords = cm.triangle_coords()
    p0 = ccoords[:, 0]
    span = np.stack([ccoords[:, 1] - p0, ccoords[:, 2] - p0], axis=-1)
    span_inv = np.linalg.inv(span)[parent]
    p0 = p0[parent]
    gl_parent = gl_c[parent]

    fcoords = fm.triangle_coords()
    coeff_f = fine.coefficients[fine.dofmap.cell_dofs]
    coeff_c = coarse.coefficients[coarse.dofmap.cell_dofs][parent]
    rule = triangle_rule()
    total = 0.0
    for qi in range(len(rule.weights)):
        lam = rule.points[qi]
        xq = np.einsum("k,tkd->td", lam, fcoords)
        _, dNf = _shape_batch(degree, lam)
        grad_f = np.einsum("ti,ik,tkd->td", coeff_f, dNf, gl_f)
        xi = np.einsum("tde,te->td", span_inv, xq - p0)
        lam_c = np.concatenate([1.0 - xi.sum(axis=1, keepdims=True), xi], axis=1)
        _, dNc = _shape_batch(degree, lam_c)
        grad_c = np.einsum("ti,tik,tkd->td", coeff_c, dNc, gl_parent)
        diff2 = ((grad_f - grad_c) ** 2).sum(axis=1)
        total += rule.weights[qi] * float((2.0 * areas_f * diff2).sum())
    return math.sqrt(total)


def prolong(coarse: FeFunction, fine_mesh: Mesh, fine_dofmap) -> FeFunction:
    """Represent a coarse function exactly on the next (nested) level."""
    if fine_mesh.parent_of_triangle is None or fine_mesh.level != coarse.mesh.level + 1:
        raise NotNested("target mesh is not the child level of the function's mesh")
    parent = fine_mesh.parent_of_triangle
    ccoords = coarse.mesh.triangle_coords()
    p0 = ccoords[:, 0][parent]
    span = np.stack([ccoords[:, 1] - ccoords[:, 0],
                     ccoords[:, 2] - ccoords[:, 0]], axis=-1)
    span_inv = np.linalg.inv(span)[parent]
    coeff_c = coarse.coefficients[coarse.dofmap.cell_dofs][parent]
    out = np.zeros(fine_dofmap.num_dofs)
    for l in range(fine_dofmap.cell_dofs.shape[1]):
        x = fine_dofmap.dof_coords[fine_dofmap.cell_dofs[:, l]]
        xi = np.einsum("tde,te->td", span_inv, x - p0)
        lam = np.concatenate([1.0 - xi.sum(axis=1, keepdims=True), xi], axis=1)
        N, _ = _shape_batch(coarse.dofmap.degree, lam)
        out[fine_dofmap.cell_dofs[:, l]] = np.einsum("ti,ti->t", coeff_c, N)
    return FeFunction(fine_mesh, fine_dofmap, out)


def run_study(spec: ProblemSpec, template: MeshTemplate,
              n_levels: Optional[int] = None, *, rel_tol: float = 1e-10,
              max_iter: Optional[int] = None,
              progress: Optional[Callable[[LevelRecord], None]] = None) -> StudyReport:
    """Refine n times, solve on every level, and collect nested rates.

    Returns a report with one record per level 0..n and rates for the
    levels where three consecutive solutions exist.  A non-converged solve
    is recorded (converged=False) and the study continues.
    """
    if n_levels is None:
        n_levels = spec.refinements
    if n_levels < 2:
        raise ValueError("a study needs n_levels >= 2")

    meshes = [build_initial_mesh(spec, template)]
    for _ in range(n_levels):
        refined, _rec = graded_refine(meshes[-1])
        meshes.append(refined)

    records: list[LevelRecord] = []
    solutions: list[FeFunction] = []
    for mesh in meshes:
        dofmap = build_dofmap(mesh, spec.degree)
        system = assemble_stiffness(mesh, dofmap)
        b = assemble_line_load(mesh, dofmap, spec.fractures)
        system = apply_dirichlet(system.with_load(b), dofmap.boundary_dofs)
        x, report = cg_solve(system, rel_tol=rel_tol, max_iter=max_iter)
        solutions.append(FeFunction(mesh, dofmap, x))
        residual_inf = float(np.abs(system.matrix @ x - system.load).max())
        rec = LevelRecord(level=mesh.level,
                          dofs=dofmap.num_dofs - len(dofmap.boundary_dofs),
                          triangles=mesh.num_triangles, solve=report,
                          h1_diff=None, load_total=float(b.sum()),
                          residual_inf=residual_inf)
        records.append(rec)
        if progress is not None:
            progress(rec)

    for j in range(1, len(solutions)):
        records[j].h1_diff = h1_seminorm_diff(solutions[j], solutions[j - 1])

    rates = {j: rate(records[j].h1_diff, records[j + 1].h1_diff)
             for j in range(1, n_levels)}
    return StudyReport(records=records, rates=rates, degree=spec.degree,
                       template_label=_template_label(template),
                       kappas=[((p.x, p.y), k) for p, k in spec.singular_points],
                       meshes=meshes, solutions=solutions)


def _template_label(template: MeshTemplate) -> str:
    name = type(template).__name__.removesuffix("Template").lower()
    return f"{name}({template})"


def seminorm_dof_slope(report: StudyReport, points: int = 3) -> float:
    """Least-squares slope of log h1_diff(level j+1) against log dofs(level j).

    Uses the last `points` levels with a defined difference; a degree-m
    method at the optimal rate gives a slope near -m/2.
    """
    pairs = [(report.records[j].dofs, report.records[j + 1].h1_diff)
             for j in range(len(report.records) - 1)
             if report.records[j + 1].h1_diff is not None]
    pairs = pairs[-points:]
    if len(pairs) < 2:
        raise ValueError("need at least two levels with differences")
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    return float(np.polyfit(x, y, 1)[0])


def write_report_csv(report: StudyReport, path) -> None:
    """CSV with columns level, dofs, triangles, cg_iters, h1_diff, rate."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "dofs", "triangles", "cg_iters", "h1_diff", "rate"])
        for rec in report.records:
            diff = "" if rec.h1_diff is None else f"{rec.h1_diff:.12e}"
            e = report.rates.get(rec.level)
            writer.writerow([rec.level, rec.dofs, rec.triangles,
                             rec.solve.iterations, diff,
                             "" if e is None else f"{e:.6f}"])
