"""kokofold: rigid-foldable quadrilateral creased papers.

Library for designing, certifying and folding quadrilateral creased papers
built from degree-4 vertices: single-vertex kinematics, the grid data model,
loop-condition certification, pattern-family generators, strip switching,
3D embedding and FOLD/OBJ export.
"""

from .errors import (
    BoundaryMismatchError,
    CrossProducedError,
    DegenerateVertexError,
    EmptyIntervalError,
    FlatCreaseError,
    InconsistentStateError,
    InfeasibleAngleError,
    KokofoldError,
    NoSolutionError,
    PanelSumViolation,
    PatternFormatError,
    RangeViolation,
    SolverFailedError,
)
from .vertex import (
    BRANCH_A,
    BRANCH_B,
    SectorAngles,
    VertexFold,
    VertexType,
    classify_vertex,
    closure_residual,
    reachable_interval,
    reachable_set,
    reduce_reflex,
    solve_vertex,
    solve_vertex_driven,
)

__version__ = "0.1.0"
