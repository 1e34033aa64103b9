"""Quadrilateral creased-paper data model.

A pattern is an m x n grid of inner degree-4 vertices.  Vertex (i, j) sits at
row i (increasing southward) and column j (increasing eastward) and stores
four sector angles counter-clockwise from the north-west corner:

    a1 = NW, a2 = SW, a3 = SE, a4 = NE

so that its creases, in the c1..c4 labelling of the vertex module (sector a_i
between creases c_{i-1} and c_i), are

    c1 = W, c2 = S, c3 = E, c4 = N.

Every crease between two inner vertices carries a single folding angle; the
boundary stubs (crease segments running from an edge vertex to the paper
boundary) carry one as well.  Inner panels are the (m-1) x (n-1) quads whose
four corners are all inner vertices; each one's corner angles must sum to
2*pi, which is the only metric constraint the grid itself imposes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PanelSumViolation, RangeViolation
from .vertex import BRANCH_A, SectorAngles, TWO_PI, classify_vertex

PANEL_SUM_TOL = 1e-9

# slot indices into the per-vertex angle quadruple
NW, SW, SE, NE = 0, 1, 2, 3
# crease indices in the vertex-local labelling
C_W, C_S, C_E, C_N = 0, 1, 2, 3


class CreasePattern:
    """Immutable m x n grid of inner vertices with crease lengths."""

    def __init__(
        self,
        vertex_angles,
        row_lengths=None,
        col_lengths=None,
        family_tag: str = "custom",
        branch_assignment=None,
        validate: bool = True,
    ):
        angles = np.asarray(vertex_angles, dtype=float)
        if angles.ndim != 3 or angles.shape[2] != 4:
            raise RangeViolation(
                f"vertex_angles must have shape (m, n, 4), got {angles.shape}"
            )
        self.m, self.n = int(angles.shape[0]), int(angles.shape[1])
        if self.m < 1 or self.n < 1:
            raise RangeViolation("grid must contain at least one inner vertex")

        self.vertex_angles = angles.copy()
        self.row_lengths = self._lengths(row_lengths, self.m + 1, "row_lengths")
        self.col_lengths = self._lengths(col_lengths, self.n + 1, "col_lengths")
        self.family_tag = str(family_tag)
        if branch_assignment is None:
            self.branch_assignment = np.full((self.m, self.n), BRANCH_A, dtype="<U1")
        else:
            ba = np.asarray(branch_assignment, dtype="<U1")
            if ba.shape != (self.m, self.n):
                raise RangeViolation("branch_assignment shape must match the grid")
            self.branch_assignment = ba.copy()

        if validate:
            self._validate()

        # raw tuples for the scalar kinematics hot path
        self.angle_tuples = tuple(
            tuple(tuple(self.vertex_angles[i, j]) for j in range(self.n))
            for i in range(self.m)
        )
        for arr in (self.vertex_angles, self.row_lengths, self.col_lengths,
                    self.branch_assignment):
            arr.setflags(write=False)

    @staticmethod
    def _lengths(values, count, name):
        if values is None:
            return np.ones(count)
        arr = np.asarray(values, dtype=float)
        if arr.shape != (count,):
            raise RangeViolation(f"{name} must have length {count}, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise RangeViolation(f"{name} must be positive and finite")
        return arr.copy()

    def _validate(self):
        a = self.vertex_angles
        if not np.all(np.isfinite(a)) or np.any(a <= 0) or np.any(a >= math.pi):
            bad = np.argwhere(~((a > 0) & (a < math.pi) & np.isfinite(a)))[0]
            raise RangeViolation(
                f"sector angle at vertex ({bad[0]}, {bad[1]}) slot {bad[2]} "
                f"outside (0, pi)"
            )
        for i, j, total in self.panel_sums():
            if abs(total - TWO_PI) > PANEL_SUM_TOL:
                raise PanelSumViolation(i, j, total)

    # -- queries ----------------------------------------------------------

    def panel_sums(self):
        """Yield (i, j, corner-angle sum) for every inner panel."""
        a = self.vertex_angles
        for i in range(self.m - 1):
            for j in range(self.n - 1):
                total = (
                    a[i, j, SE]
                    + a[i, j + 1, SW]
                    + a[i + 1, j, NE]
                    + a[i + 1, j + 1, NW]
                )
                yield i, j, total

    def vertex(self, i, j) -> SectorAngles:
        return SectorAngles(*self.vertex_angles[i, j])

    def classify(self, tol=1e-9):
        """Classification tag per vertex."""
        return [
            [classify_vertex(self.vertex(i, j), tol).tag for j in range(self.n)]
            for i in range(self.m)
        ]

    def with_branches(self, branch_assignment) -> "CreasePattern":
        return CreasePattern(
            self.vertex_angles,
            self.row_lengths,
            self.col_lengths,
            self.family_tag,
            branch_assignment,
            validate=False,
        )

    def subgrid(self, i0, j0, mm, nn, family_tag=None) -> "CreasePattern":
        """Sub-pattern of mm x nn vertices anchored at vertex (i0, j0)."""
        return CreasePattern(
            self.vertex_angles[i0 : i0 + mm, j0 : j0 + nn],
            self.row_lengths[i0 : i0 + mm + 1],
            self.col_lengths[j0 : j0 + nn + 1],
            family_tag or self.family_tag,
            self.branch_assignment[i0 : i0 + mm, j0 : j0 + nn],
            validate=False,
        )

    def to_dict(self, unit: str = "radians") -> dict:
        if unit not in ("radians", "degrees"):
            raise RangeViolation(f"unknown unit {unit!r}")
        scale = 1.0 if unit == "radians" else 180.0 / math.pi
        doc = {
            "version": 1,
            "unit": unit,
            "rows": self.m,
            "cols": self.n,
            "vertex_angles": [
                [float(x * scale) for x in self.vertex_angles[i, j]]
                for i in range(self.m)
                for j in range(self.n)
            ],
            "row_lengths": [float(x) for x in self.row_lengths],
            "col_lengths": [float(x) for x in self.col_lengths],
            "family_tag": self.family_tag,
        }
        if not np.all(self.branch_assignment == BRANCH_A):
            doc["branch_assignment"] = ["".join(row) for row in self.branch_assignment]
        return doc

    def __eq__(self, other):
        if not isinstance(other, CreasePattern):
            return NotImplemented
        return (
            self.m == other.m
            and self.n == other.n
            and np.array_equal(self.vertex_angles, other.vertex_angles)
            and np.array_equal(self.row_lengths, other.row_lengths)
            and np.array_equal(self.col_lengths, other.col_lengths)
            and self.family_tag == other.family_tag
            and np.array_equal(self.branch_assignment, other.branch_assignment)
        )

    def __repr__(self):
        return f"CreasePattern({self.m}x{self.n}, family={self.family_tag!r})"


def transpose_pattern(p: CreasePattern) -> CreasePattern:
    """Reflect the pattern across its main diagonal (rows become columns).

    The reflection swaps each vertex's west/north and south/east creases,
    i.e. slots (NW, SW, SE, NE) -> (NW, NE, SE, SW)."""
    a = p.vertex_angles[:, :, [0, 3, 2, 1]].transpose(1, 0, 2)
    return CreasePattern(
        a, p.col_lengths, p.row_lengths, p.family_tag,
        p.branch_assignment.T, validate=False,
    )


def build_grid(
    m: int,
    n: int,
    vertex_angles,
    row_lengths=None,
    col_lengths=None,
    family_tag: str = "custom",
    branch_assignment=None,
) -> CreasePattern:
    """Validated CreasePattern from an (m, n, 4) angle array and crease lengths."""
    angles = np.asarray(vertex_angles, dtype=float)
    if angles.shape != (m, n, 4):
        raise RangeViolation(
            f"vertex_angles shape {angles.shape} does not match grid ({m}, {n}, 4)"
        )
    return CreasePattern(angles, row_lengths, col_lengths, family_tag, branch_assignment)


@dataclass(frozen=True)
class KokotsakisQuad:
    """The 3x3-panel neighbourhood of inner panel (i, j).

    `pattern` is the 2x2 sub-grid of surrounding vertices; groups holds, for
    each vertex in order (TL, TR, BL, BR), its angles regrouped as
    (alpha, beta, gamma, delta) where delta faces the centre panel, gamma is
    delta's neighbour across the vertex's inner vertical crease, beta its
    neighbour across the inner horizontal crease and alpha the opposite slot.
    """

    center: tuple[int, int]
    pattern: CreasePattern
    groups: tuple[tuple[float, float, float, float], ...]


def extract_kokotsakis(p: CreasePattern, i: int, j: int) -> KokotsakisQuad:
    """Kokotsakis quadrilateral around inner panel (i, j)."""
    if not (0 <= i < p.m - 1 and 0 <= j < p.n - 1):
        raise IndexError(
            f"({i}, {j}) is not an inner panel of a {p.m}x{p.n} grid"
        )
    sub = p.subgrid(i, j, 2, 2)
    a = p.vertex_angles
    groups = (
        # (alpha, beta, gamma, delta) per vertex
        (a[i, j, NW], a[i, j, NE], a[i, j, SW], a[i, j, SE]),
        (a[i, j + 1, NE], a[i, j + 1, NW], a[i, j + 1, SE], a[i, j + 1, SW]),
        (a[i + 1, j, SW], a[i + 1, j, SE], a[i + 1, j, NW], a[i + 1, j, NE]),
        (a[i + 1, j + 1, SE], a[i + 1, j + 1, SW], a[i + 1, j + 1, NE], a[i + 1, j + 1, NW]),
    )
    return KokotsakisQuad((i, j), sub, groups)


def is_developable(p: CreasePattern, tol: float = PANEL_SUM_TOL) -> bool:
    """True iff every vertex's sector angles sum to 2*pi."""
    sums = p.vertex_angles.sum(axis=2)
    return bool(np.max(np.abs(sums - TWO_PI)) <= tol)


def is_flat_foldable_candidate(p: CreasePattern, tol: float = PANEL_SUM_TOL) -> bool:
    """True iff both opposite-sector sums equal pi at every vertex."""
    a = p.vertex_angles
    d1 = np.abs(a[:, :, NW] + a[:, :, SE] - math.pi)
    d2 = np.abs(a[:, :, SW] + a[:, :, NE] - math.pi)
    return bool(max(np.max(d1), np.max(d2)) <= tol)


@dataclass
class FoldState:
    """One folding angle per crease of the pattern at a single instant.

    h[i, k] is the folding angle of the horizontal crease segment at vertex
    row i and band k (k = 0 is the west stub of (i, 0); k = j > 0 joins
    (i, j-1) to (i, j); k = n is the east stub).  v[k, j] is the vertical
    segment of column j at band k (k = 0 north stub, k = i joins (i-1, j) to
    (i, j), k = m south stub).

    Horizontal creases below the top row are the "cut" creases of the tree
    propagation; h carries the value solved at their west vertex and h_east
    the value solved at their east vertex.  The two agree exactly when the
    folded state closes on the full pattern.
    """

    h: np.ndarray
    v: np.ndarray
    h_east: np.ndarray
    branches: np.ndarray
    driving: float = 0.0

    @property
    def m(self):
        return self.h.shape[0]

    @property
    def n(self):
        return self.v.shape[1]

    def vertex_fold(self, i, j):
        """(W, S, E, N) folding angles of vertex (i, j) in c1..c4 order."""
        w = self.h_east[i, j] if i > 0 and j > 0 else self.h[i, j]
        return (w, self.v[i + 1, j], self.h[i, j + 1], self.v[i, j])

    def cut_residuals(self):
        """|theta - phi| per cut crease, shape (m-1, n-1); empty when no loops."""
        if self.m < 2 or self.n < 2:
            return np.zeros((max(self.m - 1, 0), max(self.n - 1, 0)))
        d = self.h[1:, 1:-1] - self.h_east[1:, 1:-1]
        return np.abs(np.arctan2(np.sin(d), np.cos(d)))
