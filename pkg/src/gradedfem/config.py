"""Study configuration files: flat key = value text.

Grammar (one `key = value` per line, '#' starts a comment; `fracture` and
`singular` may repeat)::

    domain   = 0,0 1,0 1,1 0,1        # CCW polygon vertices
    template = file | structured | union-jack
    mesh_file = meshes/square_fracture_64.mesh      # template = file
    grid_x   = 0 0.25 0.5 0.75 1                    # template = structured
    grid_y   = 0 0.25 0.5 0.75 1
    cells    = 8                                    # template = union-jack
    row_shift = 0.0833333333333333                  # union-jack, optional
    fracture = 0.25,0.5 0.75,0.5
    singular = 0.25,0.5 kappa=0.2     # kappa=<value> or kappa=auto:<a>
    degree   = 1
    levels   = 6
    rel_tol  = 1e-10
    out      = out/example51_graded_k02             # optional

`kappa=auto:<a>` applies the grading-exponent rule for fracture endpoints;
domain vertices require an explicit value, which is checked against the
largest-interior-angle bound.  Relative paths resolve against the config
file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigParseError, KappaOutOfRange
from .geometry import Point2, Segment2
from .mesh import (
    FileTemplate,
    MeshTemplate,
    ProblemSpec,
    StructuredTemplate,
    UnionJackTemplate,
    largest_interior_angle,
)
from .refine import select_kappa


@dataclass
class StudyConfig:
    """Parsed study configuration (kappa entries still symbolic)."""

    path: Path
    domain: list[tuple[float, float]]
    template: str
    fractures: list[tuple[tuple[float, float], tuple[float, float]]]
    singular: list[tuple[tuple[float, float], str]]
    degree: int = 1
    levels: int = 2
    rel_tol: float = 1e-10
    out: Optional[str] = None
    mesh_file: Optional[str] = None
    grid_x: Optional[list[float]] = None
    grid_y: Optional[list[float]] = None
    cells: Optional[int] = None
    row_shift: float = 0.0
    extras: dict = field(default_factory=dict)


def _parse_point(word: str, where: str) -> tuple[float, float]:
    parts = word.split(",")
    if len(parts) != 2:
        raise ConfigParseError(f"{where}: expected 'x,y', got {word!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigParseError(f"{where}: bad coordinate in {word!r}") from exc


def parse_config(path) -> StudyConfig:
    """Parse a configuration file; raises ConfigParseError with context."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc

    values: dict[str, str] = {}
    fractures = []
    singular = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        if "=" not in line:
            raise ConfigParseError(f"{where}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "fracture":
            words = value.split()
            if len(words) != 2:
                raise ConfigParseError(f"{where}: fracture needs two points")
            fractures.append((_parse_point(words[0], where), _parse_point(words[1], where)))
        elif key == "singular":
            words = value.split()
            if len(words) != 2 or not words[1].startswith("kappa="):
                raise ConfigParseError(
                    f"{where}: singular needs '<x,y> kappa=<value|auto:a>'")
            singular.append((_parse_point(words[0], where), words[1][len("kappa="):]))
        elif key in values:
            raise ConfigParseError(f"{where}: duplicate key {key!r}")
        else:
            values[key] = value

    def take(key, default=None):
        return values.pop(key, default)

    where = str(path)
    try:
        domain_words = take("domain", "").split()
        if len(domain_words) < 3:
            raise ConfigParseError(f"{where}: domain needs at least three points")
        domain = [_parse_point(w, where) for w in domain_words]
        template = take("template")
        if template not in ("file", "structured", "union-jack"):
            raise ConfigParseError(
                f"{where}: template must be file, structured or union-jack "
                f"(got {template!r})")
        cfg = StudyConfig(
            path=path, domain=domain, template=template, fractures=fractures,
            singular=singular,
            degree=int(take("degree", "1")),
            levels=int(take("levels", "2")),
            rel_tol=float(take("rel_tol", "1e-10")),
            out=take("out"),
            mesh_file=take("mesh_file"),
            grid_x=[float(w) for w in take("grid_x", "").split()] or None,
            grid_y=[float(w) for w in take("grid_y", "").split()] or None,
            cells=int(take("cells")) if "cells" in values else None,
            row_shift=float(take("row_shift", "0")),
        )
    except ConfigParseError:
        raise
    except ValueError as exc:
        raise ConfigParseError(f"{where}: {exc}") from exc
    if values:
        raise ConfigParseError(f"{where}: unknown keys {sorted(values)}")
    return cfg


def resolve(cfg: StudyConfig, *, kappa: Optional[str] = None,
            degree: Optional[int] = None,
            levels: Optional[int] = None) -> tuple[ProblemSpec, MeshTemplate]:
    """Turn a parsed config (plus CLI overrides) into a runnable problem.

    kappa, if given, replaces the kappa entry of every singular point.
    """
    deg = degree if degree is not None else cfg.degree
    nlev = levels if levels is not None else cfg.levels

    endpoints = [p for f in cfg.fractures for p in f]
    domain = [tuple(p) for p in cfg.domain]
    probe = ProblemSpec(domain_polygon=cfg.domain, fractures=[], singular_points=[],
                        degree=deg, refinements=nlev)
    omega = largest_interior_angle(probe)

    singular_points = []
    for point, kappa_spec in cfg.singular:
        spec_str = kappa if kappa is not None else kappa_spec
        is_endpoint = any(_almost(point, e) for e in endpoints)
        if spec_str.startswith("auto:"):
            if not is_endpoint:
                raise KappaOutOfRange(
                    f"kappa=auto at ({point[0]}, {point[1]}) is only defined for "
                    "fracture endpoints; domain vertices need an explicit value")
            value = select_kappa(deg, "fracture_endpoint", a=float(spec_str[5:]))
        else:
            try:
                value = float(spec_str)
            except ValueError as exc:
                raise ConfigParseError(f"bad kappa specification {spec_str!r}") from exc
            if point in domain or any(_almost(point, d) for d in domain):
                value = select_kappa(deg, "domain_vertex", omega=omega, kappa=value)
            elif not (0.0 < value <= 0.5):
                raise KappaOutOfRange(f"kappa={value} outside (0, 0.5]")
        singular_points.append((Point2(*point), value))

    spec = ProblemSpec(
        domain_polygon=cfg.domain,
        fractures=[Segment2(Point2(*a), Point2(*b)) for a, b in cfg.fractures],
        singular_points=singular_points, degree=deg, refinements=nlev)

    if cfg.template == "file":
        if not cfg.mesh_file:
            raise ConfigParseError(f"{cfg.path}: template=file needs mesh_file")
        template: MeshTemplate = FileTemplate(path=(cfg.path.parent / cfg.mesh_file))
    elif cfg.template == "structured":
        if not (cfg.grid_x and cfg.grid_y):
            raise ConfigParseError(f"{cfg.path}: template=structured needs grid_x, grid_y")
        template = StructuredTemplate(grid_x=tuple(cfg.grid_x), grid_y=tuple(cfg.grid_y))
    else:
        if cfg.cells is None:
            raise ConfigParseError(f"{cfg.path}: template=union-jack needs cells")
        template = UnionJackTemplate(cells=cfg.cells, row_shift=cfg.row_shift)
    return spec, template


def _almost(p, q, tol: float = 1e-12) -> bool:
    return abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol
