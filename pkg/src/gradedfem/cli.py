"""Command-line driver: study, mesh and solve subcommands.

`study` runs the full refinement/solve chain and writes report.csv,
per-level solution dumps and figures; `mesh` writes the refined mesh file
only; `solve` writes one solution at the requested depth.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as config_mod
from .errors import ConfigParseError, GradedFemError
from .fem import (apply_dirichlet, assemble_line_load, assemble_stiffness,
                  build_dofmap)
from .linalg import cg_solve
from .mesh import build_initial_mesh, write_mesh_file
from .refine import graded_refine
from .report import (save_convergence_figure, save_mesh_figure,
                     save_solution_figure, write_solution_dump)
from .study import run_study, write_report_csv


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="study configuration file")
    p.add_argument("--levels", type=int, default=None, help="refinement depth override")
    p.add_argument("--degree", type=int, default=None, choices=(1, 2),
                   help="element degree override")
    p.add_argument("--kappa", default=None,
                   help="grading parameter override for every singular point "
                        "(a value, or auto:<a>)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=1,
                   help="worker cap (assembly runs as one deterministic worker)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradedfem",
        description="Graded-mesh finite elements for a line source on a fracture")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("study", "run a refinement/convergence study"),
                        ("mesh", "write the refined mesh only"),
                        ("solve", "solve once at the requested depth")):
        _add_common(sub.add_parser(name, help=help_))
    return parser


def _out_dir(args, cfg) -> Path:
    out = args.out or cfg.out or f"out/{Path(args.config).stem}"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _solve_chain(spec, template, n_levels):
    """Meshes 0..n and the solution at the deepest level."""
    meshes = [build_initial_mesh(spec, template)]
    for _ in range(n_levels):
        meshes.append(graded_refine(meshes[-1])[0])
    mesh = meshes[-1]
    dofmap = build_dofmap(mesh, spec.degree)
    system = assemble_stiffness(mesh, dofmap)
    b = assemble_line_load(mesh, dofmap, spec.fractures)
    system = apply_dirichlet(system.with_load(b), dofmap.boundary_dofs)
    x, rep = cg_solve(system)
    return meshes, x, rep


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = config_mod.parse_config(args.config)
        spec, template = config_mod.resolve(cfg, kappa=args.kappa,
                                            degree=args.degree, levels=args.levels)
        out = _out_dir(args, cfg)
        n_levels = spec.refinements

        if args.command == "mesh":
            mesh = build_initial_mesh(spec, template)
            for _ in range(n_levels):
                mesh = graded_refine(mesh)[0]
            dest = out / f"mesh_level{n_levels}.mesh"
            write_mesh_file(mesh, dest)
            print(f"wrote {dest} ({mesh.num_triangles} triangles)")
            return 0

        if args.command == "solve":
            meshes, x, rep = _solve_chain(spec, template, n_levels)
            mesh = meshes[-1]
            if not rep.converged:
                print(f"warning: solver stopped at relative residual "
                      f"{rep.relative_residual:.3e}", file=sys.stderr)
            dump = out / f"solution_level{n_levels}.vtk"
            write_solution_dump(dump, mesh, x[:mesh.num_vertices])
            save_solution_figure(mesh, x[:mesh.num_vertices],
                                 out / "solution.png", fractures=spec.fractures)
            print(f"wrote {dump} ({rep.iterations} iterations)")
            return 0

        # study
        def progress(rec):
            print(f"level {rec.level}: {rec.triangles} triangles, {rec.dofs} dofs, "
                  f"{rec.solve.iterations} iterations")

        report = run_study(spec, template, n_levels, rel_tol=cfg.rel_tol,
                           progress=progress)
        write_report_csv(report, out / "report.csv")
        for mesh, fe in zip(report.meshes, report.solutions):
            nv = mesh.num_vertices
            write_solution_dump(out / f"solution_level{mesh.level}.vtk",
                                mesh, fe.coefficients[:nv])
        save_mesh_figure(report.meshes[0], out / "mesh_level0.png",
                         fractures=spec.fractures)
        final = report.meshes[-1]
        save_solution_figure(final, report.solutions[-1].coefficients[:final.num_vertices],
                             out / "solution.png", fractures=spec.fractures)
        save_convergence_figure(report, out / "convergence.png")
        shown = ", ".join(f"e_{j}={e:.2f}" for j, e in sorted(report.rates.items()))
        print(f"wrote {out / 'report.csv'} ({shown})")
        if any(not r.solve.converged for r in report.records):
            print("warning: at least one level did not converge", file=sys.stderr)
            return 1
        return 0
    except ConfigParseError as exc:
        print(f"error: ConfigParse: {exc}", file=sys.stderr)
        return 2
    except GradedFemError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
