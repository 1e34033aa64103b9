"""Configuration-space computations for a single degree-4 vertex.

A vertex carries four sector angles a1..a4 (radians, counter-clockwise, each
in the open interval (0, pi)) and four creases c1..c4, where sector a_i lies
between creases c_{i-1} and c_i.  A folded state assigns one folding angle
r_i in [-pi, pi] to each crease; the state is valid when the loop of panel
rotations around the vertex composes to the identity.

The transfer "given the fold on one crease, find the other three" is solved
in closed form: once the driven crease is folded, the two creases adjacent
to the unknown one sweep circles on the unit sphere, and the unknown crease
direction is their intersection.  Generically there are two intersection
points; these are the two kinematic branches of the vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

from .errors import (
    DegenerateVertexError,
    FlatCreaseError,
    NoSolutionError,
    RangeViolation,
)

TWO_PI = 2.0 * math.pi

CLASSIFY_TOL = 1e-9   # on Definition-style angle equalities and sign-pattern sums
CLOSURE_TOL = 1e-10   # on the rotation-angle residual of the closure loop
_T2_EPS = 1e-12       # tolerance for the intersection discriminant at interval ends
_PARALLEL_EPS = 1e-12  # |1 - G^2| below which the two circles are concentric

BRANCH_A = "A"
BRANCH_B = "B"


def wrap_angle(x: float) -> float:
    """Wrap to (-pi, pi]."""
    x = math.fmod(x, TWO_PI)
    if x <= -math.pi:
        x += TWO_PI
    elif x > math.pi:
        x -= TWO_PI
    return x


def _check_sector(value: float, name: str) -> float:
    v = float(value)
    if not math.isfinite(v) or not 0.0 < v < math.pi:
        raise RangeViolation(f"sector angle {name} = {value!r} must lie in (0, pi)")
    return v


@dataclass(frozen=True)
class SectorAngles:
    """Four sector angles of a degree-4 vertex, counter-clockwise."""

    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4"):
            object.__setattr__(self, name, _check_sector(getattr(self, name), name))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a1, self.a2, self.a3, self.a4)

    @property
    def total(self) -> float:
        return self.a1 + self.a2 + self.a3 + self.a4

    def is_developable(self, tol: float = CLASSIFY_TOL) -> bool:
        return abs(self.total - TWO_PI) <= tol

    def rotated(self, k: int) -> "SectorAngles":
        """Cyclically relabel so that old a_{1+k} becomes new a1."""
        t = self.as_tuple()
        return SectorAngles(*(t[(i + k) % 4] for i in range(4)))


@dataclass(frozen=True)
class VertexType:
    """Classification tag plus the vanishing sign patterns of a1 +- a2 +- a3 +- a4."""

    tag: str
    solutions: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class VertexFold:
    """Folding angles r1..r4 (indexed to creases c1..c4) on one branch."""

    r1: float
    r2: float
    r3: float
    r4: float
    branch: str = BRANCH_A

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.r1, self.r2, self.r3, self.r4)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

_SIGNS = tuple(product((1, -1), repeat=3))


def eq5_solutions(angles: SectorAngles, tol: float = CLASSIFY_TOL):
    """Sign patterns (s2, s3, s4) with a1 + s2 a2 + s3 a3 + s4 a4 = 0 (mod 2*pi).

    The combinations are exactly the degeneracy conditions of the vertex
    coupling polynomial, hence the mod-2*pi reading: a developable vertex
    (sum 2*pi) vanishes on the all-plus pattern.
    """
    a1, a2, a3, a4 = angles.as_tuple()
    out = []
    for s2, s3, s4 in _SIGNS:
        v = a1 + s2 * a2 + s3 * a3 + s4 * a4
        if abs(v - TWO_PI * round(v / TWO_PI)) <= tol:
            out.append((s2, s3, s4))
    return tuple(out)


def classify_vertex(angles: SectorAngles, tol: float = CLASSIFY_TOL) -> VertexType:
    """Classify a vertex: cross, isogram, antiisogram, deltoid, antideltoid,
    conic, multiple, or elliptic, in that priority order."""
    a1, a2, a3, a4 = angles.as_tuple()
    sols = eq5_solutions(angles, tol)

    def eq(x, y):
        return abs(x - y) <= tol

    def compl(x, y):
        return abs(x + y - math.pi) <= tol

    if eq(a1, a3) and eq(a2, a4) and compl(a1, a2):
        tag = "cross"
    elif eq(a1, a3) and eq(a2, a4):
        tag = "isogram"
    elif compl(a1, a3) and compl(a2, a4):
        tag = "antiisogram"
    elif (eq(a1, a2) and eq(a3, a4)) or (eq(a2, a3) and eq(a4, a1)):
        tag = "deltoid"
    elif (compl(a1, a2) and compl(a3, a4)) or (compl(a2, a3) and compl(a4, a1)):
        tag = "antideltoid"
    elif len(sols) == 1:
        tag = "conic"
    elif len(sols) >= 2:
        tag = "multiple"
    else:
        tag = "elliptic"
    return VertexType(tag, sols)


def is_miura_like(angles: SectorAngles, tol: float = CLASSIFY_TOL) -> bool:
    """Isogram whose adjacent angles are also complementary (a, pi-a, a, pi-a)."""
    a1, a2, a3, a4 = angles.as_tuple()
    return (
        abs(a1 - a3) <= tol
        and abs(a2 - a4) <= tol
        and abs(a1 + a2 - math.pi) <= tol
        and abs(a1 - a2) > tol
    )


def reduce_reflex(angle: float, flat_tol: float = 1e-12) -> tuple[float, bool]:
    """Map a reflex sector angle into (0, pi) by the substitution a -> 2*pi - a.

    Returns (reduced_angle, substituted).  The substitution preserves the
    vertex kinematics but increases the chance of panel self-intersection, so
    callers should warn when the flag is set.  An angle of exactly pi is
    rejected: that vertex is just a plain crease, not a degree-4 vertex.
    """
    v = float(angle)
    if not math.isfinite(v) or not 0.0 < v < TWO_PI:
        raise RangeViolation(f"angle {angle!r} must lie in (0, 2*pi)")
    if abs(v - math.pi) <= flat_tol:
        raise FlatCreaseError("sector angle pi: folding along a crease, not a vertex")
    if v < math.pi:
        return v, False
    return TWO_PI - v, True


# ---------------------------------------------------------------------------
# closure residual
# ---------------------------------------------------------------------------

def _rot_x(r):
    c, s = math.cos(r), math.sin(r)
    return ((1.0, 0.0, 0.0), (0.0, c, -s), (0.0, s, c))


def _rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return ((c, -s, 0.0), (s, c, 0.0), (0.0, 0.0, 1.0))


def _mat_mul(m, n):
    return tuple(
        tuple(sum(m[i][k] * n[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    )


def rotation_angle(m) -> float:
    """Rotation angle of a 3x3 rotation matrix, accurate near zero."""
    sx = m[2][1] - m[1][2]
    sy = m[0][2] - m[2][0]
    sz = m[1][0] - m[0][1]
    s = 0.5 * math.sqrt(sx * sx + sy * sy + sz * sz)
    c = 0.5 * (m[0][0] + m[1][1] + m[2][2] - 1.0)
    return math.atan2(s, c)


def closure_residual(angles: SectorAngles, fold: VertexFold) -> float:
    """Rotation-angle magnitude of the composed loop
    R(c4,r4) T(a4) R(c3,r3) T(a3) R(c2,r2) T(a2) R(c1,r1) T(a1);
    zero exactly when the folded state closes around the vertex."""
    a = angles.as_tuple()
    r = fold.as_tuple()
    m = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    for i in range(4):
        m = _mat_mul(_mat_mul(_rot_x(r[i]), _rot_z(a[i])), m)
    return rotation_angle(m)


# ---------------------------------------------------------------------------
# closed-form transfer
# ---------------------------------------------------------------------------

def _fold_about(axis, prev_dir, next_dir):
    """Folding angle at a crease `axis`, given the neighbouring crease
    directions before and after it in counter-clockwise order."""
    ax, ay, az = axis
    px, py, pz = prev_dir
    nx, ny, nz = next_dir
    dp = px * ax + py * ay + pz * az
    dn = nx * ax + ny * ay + nz * az
    # components of the neighbours perpendicular to the axis
    wpx, wpy, wpz = px - dp * ax, py - dp * ay, pz - dp * az
    wnx, wny, wnz = nx - dn * ax, ny - dn * ay, nz - dn * az
    cx = wpy * wnz - wpz * wny
    cy = wpz * wnx - wpx * wnz
    cz = wpx * wny - wpy * wnx
    s = cx * ax + cy * ay + cz * az
    c = wpx * wnx + wpy * wny + wpz * wnz
    return wrap_angle(math.atan2(s, c) + math.pi)


def _solve_driven(a: tuple, k: int, rho: float, branch: str):
    """Closed-form transfer: fold `rho` on crease c_{k+1} (0-based k), return the
    folds on all four creases or None when the closure circles do not meet.

    Branch A carries a non-negative fold on the crease opposite the driven
    one; branch B carries the mirror solution (the opposite fold negated).
    """
    # b1..b3: sectors following the driven crease counter-clockwise;
    # b4: the sector just before it (a_i sits between c_{i-1} and c_i).
    b1, b2, b3, b4 = (a[(k + i + 1) % 4] for i in range(4))
    cb1, sb1 = math.cos(b1), math.sin(b1)
    cb2, sb2 = math.cos(b2), math.sin(b2)
    cb3, sb3 = math.cos(b3), math.sin(b3)
    cb4, sb4 = math.cos(b4), math.sin(b4)
    cr, sr = math.cos(rho), math.sin(rho)

    c1 = (1.0, 0.0, 0.0)
    c2 = (cb1, sb1, 0.0)
    c4 = (cb4, -sb4 * cr, sb4 * sr)

    g = c2[0] * c4[0] + c2[1] * c4[1]
    denom = 1.0 - g * g
    if denom < _PARALLEL_EPS:
        raise DegenerateVertexError(
            "adjacent crease circles are concentric; transfer is not unique"
        )
    ca = (cb2 - g * cb3) / denom
    cb = (cb3 - g * cb2) / denom
    t2 = (1.0 - (ca * ca + cb * cb + 2.0 * ca * cb * g)) / denom
    if t2 < -_T2_EPS:
        return None
    # sqrt amplifies rounding noise near the branch point; snap to the exact
    # tangency so the flat state of a developable vertex folds to all zeros
    t = math.sqrt(t2) if t2 > 1e-14 else 0.0
    if branch == BRANCH_A:
        t = -t
    nx = c2[1] * c4[2] - c2[2] * c4[1]
    ny = c2[2] * c4[0] - c2[0] * c4[2]
    nz = c2[0] * c4[1] - c2[1] * c4[0]
    c3 = (
        ca * c2[0] + cb * c4[0] + t * nx,
        ca * c2[1] + cb * c4[1] + t * ny,
        ca * c2[2] + cb * c4[2] + t * nz,
    )

    r2 = _fold_about(c2, c1, c3)
    r3 = _fold_about(c3, c2, c4)
    r4 = _fold_about(c4, c3, c1)

    folds = [0.0, 0.0, 0.0, 0.0]
    folds[k] = wrap_angle(rho)
    folds[(k + 1) % 4] = r2
    folds[(k + 2) % 4] = r3
    folds[(k + 3) % 4] = r4
    return tuple(folds)


def solve_vertex(angles: SectorAngles, r1: float, branch: str = BRANCH_A) -> VertexFold:
    """Fold crease c1 by r1 and return the full VertexFold on the requested branch.

    Raises NoSolutionError outside the reachable interval and
    DegenerateVertexError for cross vertices.
    """
    return solve_vertex_driven(angles, 0, r1, branch)


def solve_vertex_driven(
    angles: SectorAngles, crease: int, rho: float, branch: str = BRANCH_A
) -> VertexFold:
    """Like solve_vertex but driving an arbitrary crease (0-based index)."""
    if branch not in (BRANCH_A, BRANCH_B):
        raise ValueError(f"branch must be {BRANCH_A!r} or {BRANCH_B!r}")
    if classify_vertex(angles).tag == "cross":
        raise DegenerateVertexError("cross vertex: two co-linear crease pairs")
    folds = _solve_driven(angles.as_tuple(), crease, rho, branch)
    if folds is None:
        raise NoSolutionError(
            f"driving angle {rho:.6g} on crease c{crease + 1} is unreachable"
        )
    return VertexFold(*folds, branch=branch)


def try_solve_driven(a: tuple, crease: int, rho: float, branch: str):
    """Fast-path transfer on a raw angle tuple; returns a fold tuple or None."""
    return _solve_driven(a, crease, rho, branch)


# ---------------------------------------------------------------------------
# reachable driving angles
# ---------------------------------------------------------------------------

def reachable_set(angles: SectorAngles, crease: int = 0):
    """Closed components of driving angles on `crease` for which the transfer
    has a solution.  Either one interval symmetric about 0, or two mirror
    components [-hi, -lo] and [lo, hi], or empty."""
    a = angles.as_tuple()
    b1, b2, b3, b4 = (a[(crease + i + 1) % 4] for i in range(4))
    # the driven crease and its far neighbour span a spherical distance d with
    # cos d = cos b1 cos b4 - sin b1 sin b4 cos(rho); the transfer exists iff
    # d lies within the triangle inequalities of the two flanking sectors
    d_lo = abs(b2 - b3)
    d_hi = min(b2 + b3, TWO_PI - (b2 + b3))
    if d_hi < d_lo:
        return []
    s14 = math.sin(b1) * math.sin(b4)
    c14 = math.cos(b1) * math.cos(b4)
    lo_c = (c14 - math.cos(d_lo)) / s14
    hi_c = (c14 - math.cos(d_hi)) / s14
    lo_c, hi_c = min(lo_c, hi_c), max(lo_c, hi_c)
    lo_c = max(lo_c, -1.0)
    hi_c = min(hi_c, 1.0)
    if lo_c > hi_c:
        return []
    r_lo = math.acos(hi_c)
    r_hi = math.acos(lo_c)
    if r_lo <= 1e-12:
        return [(-r_hi, r_hi)]
    return [(-r_hi, -r_lo), (r_lo, r_hi)]


def reachable_interval(angles: SectorAngles, branch: str = BRANCH_A, crease: int = 0):
    """Maximal closed driving interval for solve_vertex on the given branch.

    Both branches share the same reachable set.  When the set splits into two
    mirror components (possible for non-developable vertices) the component
    of non-negative driving angles is returned; reachable_set exposes both.
    """
    if classify_vertex(angles).tag == "cross":
        raise DegenerateVertexError("cross vertex has no 1-DOF transfer")
    comps = reachable_set(angles, crease)
    if not comps:
        raise NoSolutionError("vertex has no closed configuration at any driving angle")
    return comps[-1]
