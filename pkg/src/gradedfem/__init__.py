"""Graded-mesh finite elements for the Poisson problem with a line source.

The solver approximates -Laplace(u) = line measure on fracture segments,
u = 0 on the boundary of a polygonal domain.  Grading the refinement
toward fracture endpoints (ratio kappa per step) restores the optimal
energy-norm convergence order of P1/P2 elements; the study harness
measures the observed order through nested-level differences.
"""

from .errors import (
    Breakdown,
    BrokenLineage,
    ConfigParseError,
    DegenerateElement,
    DimensionMismatch,
    FractureNotRepresentable,
    GradedFemError,
    InvalidMesh,
    KappaOutOfRange,
    NonpositiveDifference,
    NotNested,
    SingularPointNotAVertex,
    TwoSingularPointsInOneTriangle,
    UnsupportedDegree,
)
from .geometry import Point2, Segment2, clip_segment_to_triangle, orient2d
from .mesh import (
    FileTemplate,
    Mesh,
    ProblemSpec,
    StructuredTemplate,
    UnionJackTemplate,
    build_initial_mesh,
    largest_interior_angle,
    locate_in_ancestor,
    read_mesh_file,
    validate,
    write_mesh_file,
)
from .refine import RefinementRecord, graded_refine, select_kappa
from .fem import (
    DofMap,
    FeFunction,
    QuadratureRule,
    apply_dirichlet,
    assemble_line_load,
    assemble_stiffness,
    build_dofmap,
    evaluate,
    interpolate,
    segment_rule,
    shape_values_and_gradients,
    triangle_rule,
)
from .linalg import SolveReport, SparseSystem, cg_solve, spmv
from .study import (
    LevelRecord,
    StudyReport,
    h1_seminorm_diff,
    prolong,
    rate,
    run_study,
    seminorm_dof_slope,
    write_report_csv,
)
from .config import StudyConfig, parse_config, resolve

__version__ = "0.1.0"
