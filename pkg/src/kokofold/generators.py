"""Constructors for the eight pattern families, strip switching, and
degeneration detection.

Closed-form families (orthodiagonal, tiling, parallel repeating) assemble
their sector angles directly; the others follow the
quadrilateral-by-quadrilateral design procedure: fix the solved part, then
solve the next vertex pair's angles against panel sums plus loop-closure
residuals sampled at several driving angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundaryMismatchError,
    CrossProducedError,
    InfeasibleAngleError,
    RangeViolation,
    SolverFailedError,
)
from .foldability import (
    RIGID_FOLDABLE,
    certify,
    infer_branches,
    quad_loop_residual,
)
from .mesh import NE, NW, SE, SW, CreasePattern, build_grid
from .solver import ResidualSystem, solve
from .units import LinearUnit, estimate_linear_coefficient, make_unit
from .vertex import BRANCH_A, BRANCH_B, SectorAngles, TWO_PI, classify_vertex

FAMILIES = (
    "orthodiagonal",
    "isogonal",
    "transverse_linear",
    "longitudinal_linear",
    "conic_repeating",
    "hybrid",
    "tiling",
    "parallel_mixed",
    "parallel_repeating",
)

_BRANCHES = (BRANCH_A, BRANCH_B)


def closure_samples(n_unknowns: int) -> int:
    """Number of driving samples for in-solver closure residuals."""
    return max(5, n_unknowns // 2 + 3)


# ---------------------------------------------------------------------------
# orthodiagonal (closed form)
# ---------------------------------------------------------------------------

def _acos_step(num, den, i, j):
    if abs(den) < 1e-12:
        raise InfeasibleAngleError(i, j, math.inf)
    c = num / den
    if abs(c) > 1.0:
        raise InfeasibleAngleError(i, j, c)
    return math.acos(c)


def orthodiagonal_values(alphas, betas):
    """The (2m) x (n+1) value grid of the orthodiagonal recursion.

    Row 0 holds the alpha inputs, column 0 the beta inputs; interior values
    follow the two cosine-product recursions along rows and the tangent-ratio
    relation between successive value rows.
    """
    alphas = [float(a) for a in alphas]
    betas = [float(b) for b in betas]
    n = len(alphas) - 1
    if len(betas) % 2 == 0:
        raise RangeViolation("betas must have odd length 2m-1")
    m = (len(betas) + 1) // 2
    if n < 1 or m < 1:
        raise RangeViolation("need at least a 1x1 grid of vertices")
    for v in alphas + betas:
        if not 0.0 < v < math.pi:
            raise RangeViolation(f"input sector angle {v!r} outside (0, pi)")
    G = np.zeros((2 * m, n + 1))
    G[0, :] = alphas
    G[1:, 0] = betas
    for j in range(1, n + 1):
        G[1, j] = _acos_step(
            math.cos(G[0, j]) * math.cos(G[1, j - 1]), math.cos(G[0, j - 1]), 1, j
        )
    for i in range(1, m):
        tb = math.tan(G[2 * i, 0]) / math.tan(G[2 * i - 1, 0])
        for j in range(1, n + 1):
            t = math.tan(G[2 * i - 1, j]) * tb
            G[2 * i, j] = math.atan(t) if t > 0 else math.atan(t) + math.pi
        for j in range(1, n + 1):
            G[2 * i + 1, j] = _acos_step(
                math.cos(G[2 * i, j]) * math.cos(G[2 * i + 1, j - 1]),
                math.cos(G[2 * i, j - 1]),
                2 * i + 1,
                j,
            )
    return G

def _assemble_orthodiagonal(G, m, n, lengths=None):
    # column-alternating complement keeps every inner panel summing to 2*pi
    a = np.zeros((m, n, 4))
    for i in range(m):
        top, bot = G[2 * i], G[2 * i + 1]
        for j in range(n):
            nw, ne, sw, se = top[j], top[j + 1], bot[j], bot[j + 1]
            if j % 2 == 1:
                nw, ne, sw, se = (
                    math.pi - nw,
                    math.pi - ne,
                    math.pi - sw,
                    math.pi - se,
                )
            a[i, j] = (nw, sw, se, ne)
    p = build_grid(m, n, a, family_tag="orthodiagonal")
    for i in range(m):
        for j in range(n):
            if classify_vertex(p.vertex(i, j)).tag == "cross":
                raise CrossProducedError(f"vertex ({i}, {j}) degenerates to a cross")
    return p


def gen_orthodiagonal(alphas, betas) -> CreasePattern:
    """Orthodiagonal pattern from its independent inputs.

    alphas: n+1 first-row angles; betas: 2m-1 first-column angles.  The
    remaining values are solved step by step from the cosine-product and
    tangent-ratio recursions; raises InfeasibleAngleError when some step has
    |cos| > 1 and CrossProducedError when a solved vertex becomes a cross.
    """
    G = orthodiagonal_values(alphas, betas)
    return _assemble_orthodiagonal(G, G.shape[0] // 2, G.shape[1] - 1)


def gen_orthodiagonal_developable(alphas, betas_even) -> CreasePattern:
    """Remark-4 developable variant: beta1 = pi - alpha0 and every odd beta
    complements the preceding even one; betas_even supplies beta2, beta4, ..."""
    betas = [math.pi - float(alphas[0])]
    for b in betas_even:
        betas += [float(b), math.pi - float(b)]
    p = gen_orthodiagonal(alphas, betas)
    return CreasePattern(
        p.vertex_angles, p.row_lengths, p.col_lengths,
        family_tag="orthodiagonal_developable", validate=False,
    )


def gen_orthodiagonal_flatfoldable(alphas, betas_even) -> CreasePattern:
    """Remark-4 flat-foldable variant: beta1 = alpha0 and every odd beta
    repeats the preceding even one."""
    betas = [float(alphas[0])]
    for b in betas_even:
        betas += [float(b), float(b)]
    p = gen_orthodiagonal(alphas, betas)
    return CreasePattern(
        p.vertex_angles, p.row_lengths, p.col_lengths,
        family_tag="orthodiagonal_flatfoldable", validate=False,
    )


# ---------------------------------------------------------------------------
# tiling (closed form)
# ---------------------------------------------------------------------------

def gen_tiling(alpha, beta, gamma, m=4, n=4) -> CreasePattern:
    """Developable tiling pattern on three input angles.

    delta = 2*pi - alpha - beta - gamma; vertices at even (i+j) carry
    (alpha, beta, gamma, delta) counter-clockwise from NW, odd ones the
    mirrored complements -- the arrangement whose inner panels sum to 2*pi
    and whose loops close (validated by certification in the tests)."""
    alpha, beta, gamma = float(alpha), float(beta), float(gamma)
    delta = TWO_PI - alpha - beta - gamma
    for name, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta)):
        if not 0.0 < v < math.pi:
            raise RangeViolation(f"{name} = {v!r} outside (0, pi)")
    even = (alpha, beta, gamma, delta)
    odd = (math.pi - delta, math.pi - gamma, math.pi - beta, math.pi - alpha)
    a = np.zeros((m, n, 4))
    for i in range(m):
        for j in range(n):
            a[i, j] = even if (i + j) % 2 == 0 else odd
    p = build_grid(m, n, a, family_tag="tiling")
    for i in range(m):
        for j in range(n):
            if classify_vertex(p.vertex(i, j)).tag == "cross":
                raise CrossProducedError("tiling inputs degenerate to a cross grid")
    return p


# ---------------------------------------------------------------------------
# parallel repeating (closed form)
# ---------------------------------------------------------------------------

def gen_parallel_repeating(base_row_angles, m_repeats: int, n_cols: int = 4) -> CreasePattern:
    """Translation-symmetric pattern built from identical parallel linear
    units.

    base_row_angles is a sequence of (nw, sw) pairs, one per vertex row of
    the repeating block (one pair gives fully uniform rows, two pairs the
    two-row unit block of the stitched-unit picture).  Every vertex of row
    kind (x, y) is (x, y, pi-y, pi-x): all horizontal creases are straight
    lines (the inter-unit creases are parallel) and all columns are
    translates of one another, which the loop condition requires here.
    """
    if m_repeats < 1:
        raise RangeViolation("m_repeats must be >= 1")
    base = [(float(x), float(y)) for x, y in base_row_angles]
    if not base:
        raise RangeViolation("need at least one row of base angles")
    m = len(base) * m_repeats
    a = np.zeros((m, n_cols, 4))
    for i in range(m):
        x, y = base[i % len(base)]
        if not (0 < x < math.pi and 0 < y < math.pi):
            raise RangeViolation(f"row angles ({x}, {y}) outside (0, pi)")
        a[i, :] = (x, y, math.pi - y, math.pi - x)
    p = build_grid(m, n_cols, a, family_tag="parallel_repeating")
    for i in range(len(base)):
        if classify_vertex(p.vertex(i, 0)).tag == "cross":
            raise CrossProducedError(f"base row {i} degenerates to a cross")
    return p.with_branches(infer_branches(p, 0.7))


# ---------------------------------------------------------------------------
# quadrilateral-by-quadrilateral machinery
# ---------------------------------------------------------------------------

_SCALE_LADDER = (1.0, 0.7, 0.5, 0.35, 0.25, 0.15)


def quad_closure_vector(quad_angles, drivings, fixed=(None, None, None, None)):
    """Loop residuals of one quad at several driving angles, minimised over
    the branch choices left free by `fixed` (per-vertex branch letters or
    None).  When a driving angle falls outside the quad's reachable window
    the whole sample set is shrunk by a ladder of scale factors, so that
    infeasibility shows up as a large but informative residual rather than a
    flat penalty.  Returns the residual vector of the best combination."""
    options = [(_BRANCHES if b is None else (b,)) for b in fixed]
    best = None
    for b_tl in options[0]:
        for b_tr in options[1]:
            for b_bl in options[2]:
                for b_br in options[3]:
                    combo = (b_tl, b_tr, b_bl, b_br)
                    vec = None
                    for s in _SCALE_LADDER:
                        cand = [
                            quad_loop_residual(quad_angles, combo, d * s)
                            for d in drivings
                        ]
                        if max(cand) < math.pi:
                            vec = cand
                            break
                    if vec is None:
                        vec = [math.pi] * len(drivings)
                    norm = sum(v * v for v in vec)
                    if best is None or norm < best[0]:
                        best = (norm, vec)
    return np.array(best[1])


def _propagation_residual(angles, letters, drivings):
    """Cut-crease residual vector of a whole partial pattern, propagated at
    several (ladder-scaled) driving angles under a fixed branch assignment.
    Returns the concatenated residuals, or pi-entries when nothing
    propagates."""
    from .foldability import _try_propagate

    p = CreasePattern(angles, validate=False)
    n_cuts = max(p.m - 1, 0) * max(p.n - 1, 0)
    if n_cuts == 0:
        ok = any(
            not isinstance(_try_propagate(p, float(d), letters), tuple)
            for d in drivings
        )
        return np.zeros(0) if ok else None
    for s in _SCALE_LADDER:
        vecs = []
        for d in drivings:
            out = _try_propagate(p, float(d) * s, letters)
            if isinstance(out, tuple):
                vecs = None
                break
            vecs.append(out.cut_residuals().ravel())
        if vecs is not None:
            return np.concatenate(vecs)
    return np.full(n_cuts * len(drivings), math.pi)


class PatternAssembler:
    """Grows a pattern while keeping one global branch assignment.

    Candidate angle blocks are scored by propagating the whole grown
    pattern; the free letters of the new vertices are chosen by the best
    closure and then frozen.
    """

    def __init__(self, angles, letters=None):
        self.angles = np.asarray(angles, dtype=float).copy()
        m, n = self.angles.shape[:2]
        if letters is None:
            letters = np.full((m, n), BRANCH_A, dtype="<U1")
        self.letters = np.asarray(letters, dtype="<U1").copy()

    def residual(self, angles, free_positions, drivings):
        """Best propagation residual over the free vertices' letter choices;
        records the winning letters in self._last_letters."""
        m, n = angles.shape[:2]
        letters = np.full((m, n), BRANCH_A, dtype="<U1")
        lm, ln = self.letters.shape
        letters[: min(m, lm), : min(n, ln)] = self.letters[: min(m, lm), : min(n, ln)]
        best = None
        free = list(free_positions)
        for mask in range(1 << len(free)):
            cand = letters.copy()
            for bit, (i, j) in enumerate(free):
                cand[i % m, j % n] = _BRANCHES[(mask >> bit) & 1]
            vec = _propagation_residual(angles, cand, drivings)
            if vec is None:
                continue
            norm = float(np.linalg.norm(vec)) if vec.size else 0.0
            if best is None or norm < best[0]:
                best = (norm, vec, cand)
        if best is None:
            return None
        self._last_letters = best[2]
        return best[1]

    def commit(self, angles):
        self.angles = np.asarray(angles, dtype=float).copy()
        self.letters = self._last_letters.copy()


_DRIVE_SAMPLES = (0.25, 0.55, 0.85, 1.1, 1.35)


def _drivings(k):
    base = list(_DRIVE_SAMPLES)
    while len(base) < k:
        base.append(0.2 + 1.2 * (len(base) - len(_DRIVE_SAMPLES) + 0.5) / k)
    return tuple(base[:k])


# ---------------------------------------------------------------------------
# isogonal
# ---------------------------------------------------------------------------

def _antiisogram(a, b):
    return (a, b, math.pi - a, math.pi - b)


def gen_isogonal(row_params, col_params, rng=None, starts=8) -> CreasePattern:
    """Flat-foldable pattern with opposite sector sums pi at every vertex.

    row_params: (a, b) pairs for the first-column vertices (top to bottom);
    col_params: (a, b) pairs for the first-row vertices (left to right;
    its first entry must match row_params[0]).  The interior is solved
    vertex by vertex: two unknowns against the panel-sum constraint and the
    new quad's loop residuals.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    m, n = len(row_params), len(col_params)
    if m < 1 or n < 1:
        raise RangeViolation("need at least one row and column parameter")
    if tuple(row_params[0]) != tuple(col_params[0]):
        raise RangeViolation("row_params[0] and col_params[0] must agree")
    a = np.zeros((m, n, 4))
    for i, (p, q) in enumerate(row_params):
        a[i, 0] = _antiisogram(float(p), float(q))
    for j, (p, q) in enumerate(col_params):
        a[0, j] = _antiisogram(float(p), float(q))
    for i in range(1, m):
        for j in range(1, n):
            a[i, j] = _fill_antiisogram(a, i, j, rng, starts, "isogonal")
    p = build_grid(m, n, a, family_tag="isogonal")
    return p.with_branches(infer_branches(p, 0.8))


def _fill_antiisogram(a, i, j, rng, starts, what):
    """Solve the antiisogram vertex closing quad (i-1, j-1): its NW slot is
    pinned by the panel sum, leaving one unknown against the quad's loop
    residuals."""
    drivings = _drivings(closure_samples(1))
    target = TWO_PI - a[i - 1, j - 1, SE] - a[i - 1, j, SW] - a[i, j - 1, NE]
    if not 0.02 < target < math.pi - 0.02:
        raise SolverFailedError(
            f"{what} fill at ({i}, {j}): panel sum forces NW = "
            f"{math.degrees(target):.1f} deg outside (0, pi)",
            step=(i, j),
        )
    quad_fixed = (tuple(a[i - 1, j - 1]), tuple(a[i - 1, j]), tuple(a[i, j - 1]))

    def residual(u):
        v = _antiisogram(target, u[0])
        return quad_closure_vector(quad_fixed + (v,), drivings)

    # the 1-unknown system usually has several roots; prefer the one nearest
    # the west neighbour's parameter to keep the solved field mild
    b_ref = a[i, j - 1, SW]
    roots = []
    best_norm = math.inf
    for seed in np.linspace(0.2, math.pi - 0.2, max(starts, 8)):
        out = solve(
            ResidualSystem(residual, 1, seed_guess=np.array([seed]),
                           name=f"{what} ({i},{j})"),
            starts=1, tol=1e-10, rng=rng,
        )
        best_norm = min(best_norm, out.residual_norm)
        if out.success:
            b = float(out.x[0])
            if not any(abs(b - r) < 1e-6 for r in roots):
                roots.append(b)
    if not roots:
        raise SolverFailedError(
            f"{what} fill failed at vertex ({i}, {j}): "
            f"best residual {best_norm:.3e}",
            best_residual=best_norm, step=(i, j),
        )
    b = min(roots, key=lambda r: abs(r - b_ref))
    return _antiisogram(target, b)


def is_isogonal_input(vertex, tol=1e-9):
    a1, a2, a3, a4 = vertex
    return abs(a1 + a3 - math.pi) <= tol and abs(a2 + a4 - math.pi) <= tol


# ---------------------------------------------------------------------------
# stitched rows of linear units
# ---------------------------------------------------------------------------

@dataclass
class UnitSpec:
    """A unit kind request for row stitching: kind, variant and the free
    parameters of the first unit's constructor (later units are solved)."""

    kind: str
    variant: str = "b"
    params: tuple = ()


def _unit_param_shape(kind, variant):
    """(n_params, builder) for the solved units of a stitched row: builder
    maps a parameter vector to (top, bottom) angle tuples."""
    pi = math.pi
    if kind == "5.1":
        if variant == "b":
            return 4, lambda u: (_antiisogram(u[0], u[1]), _antiisogram(u[2], u[3]))
        return 4, lambda u: ((u[0], u[1], u[0], u[1]), (u[2], u[3], u[2], u[3]))
    if kind == "5.2":
        if variant == "b":
            return 2, lambda u: (
                (u[0], pi - u[0], pi - u[0], u[0]),
                (u[1], pi - u[1], pi - u[1], u[1]),
            )
        return 4, lambda u: ((u[0], u[1], u[1], u[0]), (u[2], u[3], u[3], u[2]))
    if kind == "5.3":
        return 3, lambda u: (
            (u[0], pi - u[0], pi - u[0], u[0]),
            _antiisogram(u[1], u[2]),
        )
    if kind == "5.5":
        return 2, lambda u: (
            (u[0], u[1], pi - u[1], pi - u[0]),
            (u[1], u[0], pi - u[0], pi - u[1]),
        )
    if kind == "5.4":
        return 8, lambda u: (tuple(u[:4]), tuple(u[4:]))
    raise ValueError(f"unknown unit kind {kind!r}")


@dataclass
class DegenerationEvent:
    kind: str          # "vertex" | "quad"
    position: tuple
    detail: str
    tolerance: float


@dataclass
class DegenerationReport:
    vertex_events: list = field(default_factory=list)
    quad_events: list = field(default_factory=list)
    coincidences: list = field(default_factory=list)

    def has_mark(self, mark: str) -> bool:
        return any(e.detail.startswith(mark) for e in self.quad_events)

    def summary(self):
        return (
            f"{len(self.vertex_events)} vertex downgrade(s), "
            f"{len(self.quad_events)} quad event(s), "
            f"{len(self.coincidences)} angle coincidence group(s)"
        )


def _stitch_residual(prev_top, prev_bot, build, u, drivings, repeat=True):
    """Residual vector for stitching a new unit after (prev_top, prev_bot):
    centre and seam panel sums plus quad and seam loop residuals."""
    top, bot = build(u)
    centre = prev_top[SE] + top[SW] + prev_bot[NE] + bot[NW] - TWO_PI
    parts = [[centre]]
    quad = (prev_top, top, prev_bot, bot)
    parts.append(quad_closure_vector(quad, drivings))
    if repeat:
        seam = prev_bot[SE] + bot[SW] + prev_top[NE] + top[NW] - TWO_PI
        parts.append([seam])
        seam_quad = (prev_bot, bot, prev_top, top)
        parts.append(quad_closure_vector(seam_quad, drivings))
    return np.concatenate([np.atleast_1d(np.asarray(x, dtype=float)) for x in parts])


def gen_linear_repeating_transverse(
    unit_specs, m_repeats: int = 2, rng=None, starts=12, on_degeneration=None,
    parallel_compatible: bool = False,
) -> CreasePattern:
    """Transverse linear repeating: stitch a row of linear units (rotated
    position, vertical vertex pairs) and repeat the two-row block.

    unit_specs: sequence of UnitSpec (or LinearUnit for the first); the
    first unit is built from its parameters, later units' angles are solved
    against the stitching constraints (centre-panel sum, loop closure) plus
    the repeat constraints (seam-panel sum, seam loop closure).  Returns the
    assembled (2*m_repeats) x n pattern with inferred branches; known
    degenerating kind combinations are reported through `on_degeneration`
    (a callable receiving a DegenerationEvent) without failing the build.
    With parallel_compatible=True the bottom boundary is additionally
    constrained by SE + SW = pi across each stitch, so that a parallel
    repeating strip can later be attached below (the mixed type).
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if len(unit_specs) < 2:
        raise RangeViolation("need at least two units to stitch a row")
    units = []
    first = unit_specs[0]
    if isinstance(first, LinearUnit):
        units.append((first.top, first.bottom, first.kind, first.variant))
    else:
        u = make_unit(first.kind, first.variant, first.params, rng=rng)
        units.append((u.top, u.bottom, u.kind, u.variant))

    for idx, spec in enumerate(unit_specs[1:], start=1):
        if isinstance(spec, LinearUnit):
            spec = UnitSpec(spec.kind, spec.variant, ())
        n_par, build = _unit_param_shape(spec.kind, spec.variant)
        drivings = _drivings(closure_samples(n_par))
        prev_top, prev_bot = units[-1][0], units[-1][1]

        def residual(u):
            vec = _stitch_residual(prev_top, prev_bot, build, u, drivings)
            if parallel_compatible:
                top, bot = build(u)
                vec = np.concatenate([vec, [prev_bot[SE] + bot[SW] - math.pi]])
            return vec

        seed = None
        if spec.params:
            seed = np.asarray(spec.params, dtype=float)
            if seed.shape != (n_par,):
                seed = None
        out = solve(
            ResidualSystem(residual, n_par, seed_guess=seed,
                           lower=0.1, upper=math.pi - 0.1,
                           name=f"stitch unit {idx} ({spec.kind}{spec.variant})"),
            starts=starts, tol=1e-9, rng=rng,
        )
        if not out.success:
            raise SolverFailedError(
                f"unit {idx} ({spec.kind}({spec.variant})) cannot stitch: "
                f"best residual {out.residual_norm:.3e}",
                best_residual=out.residual_norm, step=idx,
            )
        top, bot = build(out.x)
        units.append((top, bot, spec.kind, spec.variant))
        kinds = {units[-2][2], spec.kind}
        if on_degeneration is not None and ("5.2" in kinds):
            if kinds == {"5.2"}:
                on_degeneration(DegenerationEvent(
                    "quad", (idx - 1, idx), "mark2: orthodiagonal degeneration "
                    "(5.2-5.2 stitching)", 1e-6))
            elif kinds & {"5.5", "5.3"}:
                on_degeneration(DegenerationEvent(
                    "quad", (idx - 1, idx), "mark1: parallel repeating degeneration",
                    1e-6))

    n = len(units)
    a = np.zeros((2 * m_repeats, n, 4))
    for j, (top, bot, _, _) in enumerate(units):
        for r in range(m_repeats):
            a[2 * r, j] = top
            a[2 * r + 1, j] = bot
    p = build_grid(2 * m_repeats, n, a, family_tag="transverse_linear")
    return p.with_branches(infer_branches(p, 0.7))


_LONGITUDINAL_KINDS = ("5.1", "5.3")


def _rotated_param_shape(kind):
    """Parametrization of one vertex of a regular-position (horizontal)
    unit: classes are stated relative to a 90-degree rotated slot layout."""
    pi = math.pi
    if kind == "5.1":
        # antiisogram classes are rotation-invariant
        return 2, lambda u: _antiisogram(u[0], u[1])
    if kind == "5.3":
        # rotated developable deltoid: equal pairs across W and E creases
        return 1, lambda u: (u[0], u[0], pi - u[0], pi - u[0])
    raise ValueError(f"longitudinal rows use kinds {_LONGITUDINAL_KINDS}")


def gen_linear_repeating_longitudinal(
    kinds, first_params, n_cols: int = 4, m_repeats: int = 2, rng=None, starts=12
) -> CreasePattern:
    """Longitudinal linear repeating: units in regular position (horizontal
    vertex pairs), kinds restricted to 5.1 and 5.3.

    kinds[j] gives the kind of the horizontal unit joining columns j and
    j+1 on the top row (the bottom row mirrors the kind sequence);
    first_params seeds the first column's two vertices as
    ((top a, b), (bottom a, b)).  Each later column is solved against the
    panel sums, loop closure and the vertical repeat constraints.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    kinds = list(kinds)
    if len(kinds) != n_cols - 1:
        raise RangeViolation("need one unit kind per adjacent column pair")
    for k in kinds:
        if k not in _LONGITUDINAL_KINDS:
            raise RangeViolation(
                f"longitudinal repeating uses kinds {_LONGITUDINAL_KINDS}, got {k!r}"
            )
    (ta, tb), (ba, bb) = first_params
    cols = [(_antiisogram(float(ta), float(tb)), _antiisogram(float(ba), float(bb)))]
    for j in range(1, n_cols):
        kind = kinds[j - 1]
        np_top, build_top = _rotated_param_shape(kind)
        np_bot, build_bot = _rotated_param_shape(kind)
        n_par = np_top + np_bot
        drivings = _drivings(closure_samples(n_par))
        prev_top, prev_bot = cols[-1]

        def build(u):
            return build_top(u[:np_top]), build_bot(u[np_top:])

        def residual(u):
            top, bot = build(u)
            centre = prev_top[SE] + top[SW] + prev_bot[NE] + bot[NW] - TWO_PI
            seam = prev_bot[SE] + bot[SW] + prev_top[NE] + top[NW] - TWO_PI
            quad = (prev_top, top, prev_bot, bot)
            seam_quad = (prev_bot, bot, prev_top, top)
            return np.concatenate([
                [centre, seam],
                quad_closure_vector(quad, drivings),
                quad_closure_vector(seam_quad, drivings),
            ])

        out = solve(
            ResidualSystem(residual, n_par, lower=0.1, upper=math.pi - 0.1,
                           name=f"longitudinal column {j} ({kind})"),
            starts=starts, tol=1e-9, rng=rng,
        )
        if not out.success:
            raise SolverFailedError(
                f"column {j} ({kind}) cannot stitch: best residual "
                f"{out.residual_norm:.3e}",
                best_residual=out.residual_norm, step=j,
            )
        cols.append(build(out.x))

    a = np.zeros((2 * m_repeats, n_cols, 4))
    for j, (top, bot) in enumerate(cols):
        for r in range(m_repeats):
            a[2 * r, j] = top
            a[2 * r + 1, j] = bot
    p = build_grid(2 * m_repeats, n_cols, a, family_tag="longitudinal_linear")
    return p.with_branches(infer_branches(p, 0.7))


# ---------------------------------------------------------------------------
# conic repeating
# ---------------------------------------------------------------------------

def make_conic_seed(rng=None, starts=24):
    """A 2x2 block of developable conic vertices whose quad closes and whose
    vertical repetition is consistent; used to seed gen_conic_repeating."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    drivings = _drivings(closure_samples(8))
    margin = 0.1

    def named_penalty(v):
        a1, a2, a3, a4 = v
        pi = math.pi
        dists = [
            abs(a1 - a3) + abs(a2 - a4),
            abs(a1 + a3 - pi) + abs(a2 + a4 - pi),
            min(abs(a1 - a2) + abs(a3 - a4), abs(a2 - a3) + abs(a4 - a1)),
            min(abs(a1 + a2 - pi) + abs(a3 + a4 - pi),
                abs(a2 + a3 - pi) + abs(a4 + a1 - pi)),
        ]
        return [max(0.0, margin - d) for d in dists]

    def vertex_of(u):
        # developable by construction: the fourth angle closes the sum
        return (u[0], u[1], u[2], TWO_PI - u[0] - u[1] - u[2])

    def residual(u):
        quad = [vertex_of(u[3 * k : 3 * k + 3]) for k in range(4)]
        gates = []
        for v in quad:
            if not 0.05 < v[3] < math.pi - 0.05:
                return np.full(4 + len(drivings) * 2 + 16, math.pi)
            gates += named_penalty(v)
        tl, tr, bl, br = quad
        centre = tl[SE] + tr[SW] + bl[NE] + br[NW] - TWO_PI
        seam = bl[SE] + br[SW] + tl[NE] + tr[NW] - TWO_PI
        return np.concatenate([
            [centre, seam],
            quad_closure_vector(tuple(quad), drivings),
            quad_closure_vector((bl, br, tl, tr), drivings),
            gates,
            [0.0, 0.0],
        ])

    base = gen_tiling(1.45, 1.7, 1.25, m=2, n=2).vertex_angles
    seed = np.concatenate([base[i, j, :3] for i in (0, 1) for j in (0, 1)])
    seed = seed + rng.normal(0, 0.04, 12)
    out = solve(
        ResidualSystem(residual, 12, seed_guess=np.clip(seed, 0.3, math.pi - 0.3),
                       lower=0.2, upper=math.pi - 0.2, name="conic seed"),
        starts=starts, tol=1e-9, rng=rng,
    )
    if not out.success:
        raise SolverFailedError("no conic seed found", best_residual=out.residual_norm)
    u = out.x
    quad = np.array([
        [vertex_of(u[0:3]), vertex_of(u[3:6])],
        [vertex_of(u[6:9]), vertex_of(u[9:12])],
    ])
    return quad


def gen_conic_repeating(
    seed_quad_angles, n_cols: int = 3, m_repeats: int = 2, rng=None, starts=16,
    on_degeneration=None,
) -> CreasePattern:
    """Conic repeating: extend a row of all-conic quads column pair by
    column pair and repeat the two-row block longitudinally.

    The seed is a (2, 2, 4) block whose vertices classify as conic; each new
    column's eight angles are solved against developability, the panel sums
    (centre and repeat seam) and the loop residuals of the new quad and its
    seam image.  Raises SolverFailedError with the failing column index when
    multi-start is exhausted.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    seed = np.asarray(seed_quad_angles, dtype=float)
    if seed.shape != (2, 2, 4):
        raise RangeViolation("seed quad must have shape (2, 2, 4)")
    for i in range(2):
        for j in range(2):
            tag = classify_vertex(SectorAngles(*seed[i, j])).tag
            if tag != "conic":
                raise RangeViolation(
                    f"seed vertex ({i}, {j}) classifies as {tag}, not conic"
                )
    cols = [(tuple(seed[0, 0]), tuple(seed[1, 0])), (tuple(seed[0, 1]), tuple(seed[1, 1]))]
    drivings = _drivings(closure_samples(6))
    for j in range(2, n_cols):
        prev_top, prev_bot = cols[-1]

        def build(u):
            return (
                (u[0], u[1], u[2], TWO_PI - u[0] - u[1] - u[2]),
                (u[3], u[4], u[5], TWO_PI - u[3] - u[4] - u[5]),
            )

        def residual(u):
            top, bot = build(u)
            if not (0.05 < top[3] < math.pi - 0.05 and 0.05 < bot[3] < math.pi - 0.05):
                return np.full(2 + 2 * len(drivings), math.pi)
            return _stitch_residual(prev_top, prev_bot, lambda _: (top, bot),
                                    None, drivings)

        guess = np.concatenate([np.asarray(prev_top[:3]), np.asarray(prev_bot[:3])])
        out = solve(
            ResidualSystem(residual, 6, seed_guess=guess,
                           lower=0.2, upper=math.pi - 0.2,
                           name=f"conic column {j}"),
            starts=starts, tol=1e-9, rng=rng,
        )
        if not out.success:
            raise SolverFailedError(
                f"conic extension failed at column {j}: best residual "
                f"{out.residual_norm:.3e}",
                best_residual=out.residual_norm, step=j,
            )
        top, bot = build(out.x)
        for v in (top, bot):
            tag = classify_vertex(SectorAngles(*v), tol=1e-7).tag
            if tag != "conic" and on_degeneration is not None:
                on_degeneration(DegenerationEvent(
                    "vertex", (j,), f"solved conic vertex degenerated to {tag}", 1e-7))
        cols.append((top, bot))

    a = np.zeros((2 * m_repeats, n_cols, 4))
    for j, (top, bot) in enumerate(cols):
        for r in range(m_repeats):
            a[2 * r, j] = top
            a[2 * r + 1, j] = bot
    p = build_grid(2 * m_repeats, n_cols, a, family_tag="conic_repeating")
    return p.with_branches(infer_branches(p, 0.7))


# ---------------------------------------------------------------------------
# hybrid
# ---------------------------------------------------------------------------

def gen_hybrid(seed_quad: CreasePattern, total_size=(4, 4), rng=None, starts=10) -> CreasePattern:
    """Hybrid pattern: a certified 2x2 seed quad, its first row and column
    extended by stitching, and the remaining field filled one antiisogram
    vertex at a time.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if (seed_quad.m, seed_quad.n) != (2, 2):
        raise RangeViolation("seed quad must be a 2x2 pattern")
    rep = certify(seed_quad, branches=infer_branches(seed_quad, 0.6))
    if rep.verdict != RIGID_FOLDABLE:
        raise RangeViolation("seed quad failed certification")
    m, n = total_size
    if m < 2 or n < 2:
        raise RangeViolation("total size must be at least 2x2")
    a = np.zeros((m, n, 4))
    a[:2, :2] = seed_quad.vertex_angles
    drivings = _drivings(closure_samples(8))

    # extend the first two rows to the right, one column pair at a time
    for j in range(2, n):
        prev_top, prev_bot = tuple(a[0, j - 1]), tuple(a[1, j - 1])

        def build(u):
            return tuple(u[:4]), tuple(u[4:])

        def residual(u):
            return _stitch_residual(prev_top, prev_bot, build, u, drivings,
                                    repeat=False)

        guess = np.concatenate([a[0, j - 1], a[1, j - 1]])
        out = solve(
            ResidualSystem(residual, 8, seed_guess=guess,
                           lower=0.15, upper=math.pi - 0.15,
                           name=f"hybrid column {j}"),
            starts=starts, tol=1e-9, rng=rng,
        )
        if not out.success:
            raise SolverFailedError(
                f"hybrid row extension failed at column {j}",
                best_residual=out.residual_norm, step=(0, j),
            )
        a[0, j], a[1, j] = out.x[:4], out.x[4:]

    # extend the first two columns downward, one row pair at a time
    for i in range(2, m):
        prev_l, prev_r = tuple(a[i - 1, 0]), tuple(a[i - 1, 1])

        def build(u):
            return tuple(u[:4]), tuple(u[4:])

        def residual(u):
            left, right = build(u)
            panel = prev_l[SE] + prev_r[SW] + left[NE] + right[NW] - TWO_PI
            quad = (prev_l, prev_r, left, right)
            return np.concatenate([[panel], quad_closure_vector(quad, drivings)])

        guess = np.concatenate([a[i - 1, 0], a[i - 1, 1]])
        out = solve(
            ResidualSystem(residual, 8, seed_guess=guess,
                           lower=0.15, upper=math.pi - 0.15,
                           name=f"hybrid row {i}"),
            starts=starts, tol=1e-9, rng=rng,
        )
        if not out.success:
            raise SolverFailedError(
                f"hybrid column extension failed at row {i}",
                best_residual=out.residual_norm, step=(i, 0),
            )
        a[i, 0], a[i, 1] = out.x[:4], out.x[4:]

    # isogonal-style fill of the remaining field
    for i in range(2, m):
        for j in range(2, n):
            a[i, j] = _fill_antiisogram(a, i, j, rng, starts, "hybrid")

    p = build_grid(m, n, a, family_tag="hybrid")
    return p.with_branches(infer_branches(p, 0.6))


# ---------------------------------------------------------------------------
# parallel mixed
# ---------------------------------------------------------------------------

def gen_parallel_mixed(base: CreasePattern, repeat_rows: int, rng=None,
                       starts=10) -> CreasePattern:
    """Append parallel-repeating rows below a certified base pattern.

    The appended rows are identical parallel rows (x, y, pi-y, pi-x).  The
    base's bottom boundary must leave room for a translation-symmetric
    strip: SE(j) + SW(j+1) = pi along its bottom row (otherwise the panel
    sums force non-uniform parallel columns, which cannot fold).  The two
    free angles of the appended rows are solved from the seam quads' loop
    residuals; incompatible boundaries raise BoundaryMismatchError.
    """
    if repeat_rows == 0:
        return base
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    m, n = base.m, base.n
    bottom = base.vertex_angles[m - 1]
    for j in range(n - 1):
        gap = bottom[j, SE] + bottom[j + 1, SW] - math.pi
        if abs(gap) > 1e-7:
            raise BoundaryMismatchError(
                f"base bottom row is not parallel-compatible at column {j} "
                f"(SE + SW deviates from pi by {gap:.3g})"
            )

    drivings = _drivings(closure_samples(2))

    def row_of(u):
        x, y = u
        return (x, y, math.pi - y, math.pi - x)

    def residual(u):
        v = row_of(u)
        out = []
        for j in range(n - 1):
            quad = (tuple(bottom[j]), tuple(bottom[j + 1]), v, v)
            out.append(quad_closure_vector(quad, drivings))
        if repeat_rows > 1:
            out.append(quad_closure_vector((v, v, v, v), drivings))
        return np.concatenate(out)

    guess = np.clip(np.array([math.pi - bottom[0, NE], bottom[0, SW]]),
                    0.15, math.pi - 0.15)
    out = solve(
        ResidualSystem(residual, 2, seed_guess=guess,
                       lower=0.1, upper=math.pi - 0.1, name="parallel mixed row"),
        starts=starts, tol=1e-9, rng=rng,
    )
    if not out.success:
        raise SolverFailedError(
            "no parallel row closes against the base",
            best_residual=out.residual_norm,
        )
    v = row_of(out.x)
    a = np.zeros((m + repeat_rows, n, 4))
    a[:m] = base.vertex_angles
    a[m:] = v
    row_lengths = np.concatenate([
        base.row_lengths, np.full(repeat_rows, base.row_lengths[-1])
    ])
    p = CreasePattern(a, row_lengths, base.col_lengths, family_tag="parallel_mixed")
    return p.with_branches(infer_branches(p, 0.6))


# ---------------------------------------------------------------------------
# strip switching
# ---------------------------------------------------------------------------

def switch_strip(p: CreasePattern, axis: str, index: int) -> CreasePattern:
    """Replace the sector angles on one strip of panels by their complements
    to pi.

    axis "row" switches panel row `index` (0..m: the strip between vertex
    rows index-1 and index); axis "col" switches panel column `index`
    (0..n).  Switching twice is the identity, and the operation preserves
    rigid-foldability.
    """
    a = p.vertex_angles.copy()
    m, n = p.m, p.n
    if axis == "row":
        if not 0 <= index <= m:
            raise RangeViolation(f"panel row {index} outside 0..{m}")
        if index >= 1:
            i = index - 1
            a[i, :, SW] = math.pi - a[i, :, SW]
            a[i, :, SE] = math.pi - a[i, :, SE]
        if index <= m - 1:
            i = index
            a[i, :, NW] = math.pi - a[i, :, NW]
            a[i, :, NE] = math.pi - a[i, :, NE]
    elif axis == "col":
        if not 0 <= index <= n:
            raise RangeViolation(f"panel column {index} outside 0..{n}")
        if index >= 1:
            j = index - 1
            a[:, j, NE] = math.pi - a[:, j, NE]
            a[:, j, SE] = math.pi - a[:, j, SE]
        if index <= n - 1:
            j = index
            a[:, j, NW] = math.pi - a[:, j, NW]
            a[:, j, SW] = math.pi - a[:, j, SW]
    else:
        raise RangeViolation(f"axis must be 'row' or 'col', got {axis!r}")
    return CreasePattern(
        a, p.row_lengths, p.col_lengths,
        family_tag=p.family_tag + "+switched",
        branch_assignment=p.branch_assignment,
    )


def switched_state_map(p: CreasePattern, s, axis: str, index: int):
    """Predict the switched pattern's folded state from an original one.

    Creases crossing the switched strip map t -> -1/t on their tan-half
    values; the strip's boundary creases (those bordering the switched
    panels) negate; everything else is unchanged.  Returns (h, v, h_east)
    arrays of the predicted state.
    """
    h = s.h.copy()
    h_east = s.h_east.copy()
    v = s.v.copy()
    m, n = p.m, p.n

    def flip_inv(val):
        t = math.tan(0.5 * val)
        if abs(t) < 1e-14:
            return math.pi  # tan-half of +-pi is infinite; 0 maps to the fold limit
        return 2.0 * math.atan(-1.0 / t)

    if axis == "row":
        # vertical segments crossing panel row `index` are v[index, :]
        v[index, :] = [flip_inv(val) for val in v[index, :]]
        if index >= 1:
            h[index - 1, :] = -h[index - 1, :]
            h_east[index - 1, :] = -h_east[index - 1, :]
        if index <= m - 1:
            h[index, :] = -h[index, :]
            h_east[index, :] = -h_east[index, :]
    elif axis == "col":
        h[:, index] = [flip_inv(val) for val in h[:, index]]
        h_east[:, index] = [flip_inv(val) for val in h_east[:, index]]
        if index >= 1:
            v[:, index - 1] = -v[:, index - 1]
        if index <= n - 1:
            v[:, index] = -v[:, index]
    else:
        raise RangeViolation(f"axis must be 'row' or 'col', got {axis!r}")
    return h, v, h_east


# ---------------------------------------------------------------------------
# degeneration detection
# ---------------------------------------------------------------------------

_SPECIALNESS = {
    "elliptic": 0,
    "conic": 1,
    "multiple": 2,
    "deltoid": 3,
    "antideltoid": 3,
    "isogram": 3,
    "antiisogram": 3,
    "miura": 4,
    "cross": 5,
}

TOLERANCE_LADDER = (1e-9, 1e-6, 1e-3)


def _tag_at(v: SectorAngles, tol):
    from .vertex import is_miura_like

    tag = classify_vertex(v, tol).tag
    if tag in ("isogram", "antideltoid") and is_miura_like(v, tol):
        return "miura"
    return tag


def detect_degeneration(p: CreasePattern, tol: float = 1e-6) -> DegenerationReport:
    """Scan for vertices and quads that fall into more special classes.

    Per vertex, the classification is re-run along the tolerance ladder and
    any upgrade relative to the strictest rung is reported.  Per quad, the
    two structural marks of stitched linear units are checked: mark1, the
    parallel-repeating structure (straight horizontal creases at all four
    vertices) and mark2, the orthodiagonal structure (equal opposite
    cosine products at all four vertices).  Recurring angle values beyond
    the grid's structural sharing are listed as coincidences.
    """
    report = DegenerationReport()
    rungs = [r for r in TOLERANCE_LADDER if r <= tol * 1.0000001] or [tol]
    for i in range(p.m):
        for j in range(p.n):
            v = p.vertex(i, j)
            base = _tag_at(v, TOLERANCE_LADDER[0])
            for rung in rungs:
                t = _tag_at(v, rung)
                if _SPECIALNESS[t] > _SPECIALNESS[base]:
                    report.vertex_events.append(
                        DegenerationEvent("vertex", (i, j), f"{base} -> {t}", rung)
                    )
                    break

    a = p.vertex_angles
    for i in range(p.m - 1):
        for j in range(p.n - 1):
            for rung in rungs:
                quad = a[i : i + 2, j : j + 2]
                straight = np.abs(quad[:, :, NW] + quad[:, :, NE] - math.pi)
                straight2 = np.abs(quad[:, :, SW] + quad[:, :, SE] - math.pi)
                if straight.max() <= rung and straight2.max() <= rung:
                    report.quad_events.append(DegenerationEvent(
                        "quad", (i, j), "mark1: parallel repeating structure", rung))
                    break
                ortho = np.abs(
                    np.cos(quad[:, :, NW]) * np.cos(quad[:, :, SE])
                    - np.cos(quad[:, :, SW]) * np.cos(quad[:, :, NE])
                )
                if ortho.max() <= rung:
                    report.quad_events.append(DegenerationEvent(
                        "quad", (i, j), "mark2: orthodiagonal structure", rung))
                    break

    # recurring values beyond the structural sharing of the grid
    rounded = np.round(a.ravel() / 1e-6) * 1e-6
    values, counts = np.unique(rounded, return_counts=True)
    expected = max(4, 2 * (p.m + p.n))
    for val, cnt in zip(values, counts):
        if cnt > expected:
            report.coincidences.append((float(val), int(cnt)))
    return report
