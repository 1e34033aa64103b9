"""Linear units: two-vertex blocks with linear tan-half-angle laws.

A linear unit is a vertical pair of degree-4 vertices sharing a crease and
the two panels flanking it.  Writing t(c) = tan(rho_c / 2), the block is a
linear unit when its two horizontal crease levels obey exact proportionality
through the whole motion:

    t(E_top) = c  * t(E_bot)        (east ports,  "rho2 = c rho5" law)
    t(W_top) = c' * t(W_bot)        (west ports,  "rho4 = c' rho7" law)

with constants c, c' depending only on the sector angles.  Stitching two
units side by side identifies one unit's east ports with the next one's west
ports, so a row of units is consistent exactly when neighbouring constants
match (c of the left unit equals c' of the right one).

Five constructible kinds are provided, defined by vertex-classification
gates plus, where needed, a numerically solved matching condition:

    5.1  two (anti)isograms; the unit constant is calibrated to the
         half-angle coefficient sin((a-b)/2)/sin((a+b)/2) or its cos variant
    5.2  two mirror-symmetric deltoids (matching condition; identically
         satisfied for the developable (b) variant)
    5.3  developable deltoid over an antiisogram
    5.4  two conic vertices co-solved for linearity (no developable variant)
    5.5  two mirrored antideltoids (the "parallel" unit; c = c' = 1;
         intrinsically developable, so only the (b) variant exists)

The (b) variants are developable at both vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleAngleError, SolverFailedError
from .mesh import C_E, C_N, C_S, C_W, NE, NW, SE, SW
from .solver import ResidualSystem, solve
from .vertex import (
    BRANCH_A,
    BRANCH_B,
    DegenerateVertexError,
    SectorAngles,
    classify_vertex,
    try_solve_driven,
)

UNIT_KINDS = ("5.1", "5.2", "5.3", "5.4", "5.5")
LINEAR_FIT_TOL = 1e-6   # above this the block is not a linear unit
FIT_SAMPLES = 20
_BRANCH_PAIRS = tuple((bt, bb) for bt in (BRANCH_A, BRANCH_B) for bb in (BRANCH_A, BRANCH_B))


class NonlinearUnitError(SolverFailedError):
    """The two-vertex block does not obey a linear tan-half law."""


def kappa_sin(alpha: float, beta: float) -> float:
    """sin((alpha-beta)/2) / sin((alpha+beta)/2)."""
    return math.sin(0.5 * (alpha - beta)) / math.sin(0.5 * (alpha + beta))


def kappa_cos(alpha: float, beta: float) -> float:
    """cos((alpha-beta)/2) / cos((alpha+beta)/2)."""
    return math.cos(0.5 * (alpha - beta)) / math.cos(0.5 * (alpha + beta))


@dataclass(frozen=True)
class LinearUnit:
    """Two vertically adjacent vertices forming a linear unit.

    top / bottom are angle quadruples in grid slot order (NW, SW, SE, NE);
    the shared crease is top's south = bottom's north.  branches is the
    (top, bottom) kinematic branch pair of the motion realising the laws.
    """

    top: tuple
    bottom: tuple
    kind: str
    variant: str  # "a" or "b"
    branches: tuple = (BRANCH_A, BRANCH_A)

    def vertices(self):
        return SectorAngles(*self.top), SectorAngles(*self.bottom)

    def is_developable(self, tol=1e-9):
        two_pi = 2.0 * math.pi
        return (
            abs(sum(self.top) - two_pi) <= tol
            and abs(sum(self.bottom) - two_pi) <= tol
        )

    def angle_block(self):
        """(2, 1, 4) vertex-angle array for grid assembly."""
        return np.array([[self.top], [self.bottom]])


# ---------------------------------------------------------------------------
# motion sampling and the linear-law fit
# ---------------------------------------------------------------------------

def _continued(angles, crease, value, start_branch, history):
    """Transfer continuing a motion: at the first sample the start branch
    decides; afterwards the solution closest to a linear extrapolation of
    the last two samples wins.  The physical motion is continuous, while the
    branch letter (a fold-sign convention) may swap solution sheets."""
    try:
        if not history:
            f = try_solve_driven(angles, crease, value, start_branch)
            if f is not None:
                history.append(f)
            return f
        if len(history) >= 2:
            pred = tuple(2 * a - b for a, b in zip(history[-1], history[-2]))
        else:
            pred = history[-1]
        best = None
        for b in (BRANCH_A, BRANCH_B):
            f = try_solve_driven(angles, crease, value, b)
            if f is None:
                continue
            d = sum((fi - pi) ** 2 for fi, pi in zip(f, pred))
            if best is None or d < best[0]:
                best = (d, f)
        if best is None:
            return None
        history.append(best[1])
        if len(history) > 2:
            history.pop(0)
        return best[1]
    except DegenerateVertexError:
        return None


def unit_motion_samples(unit_or_pair, branches=None, n: int = FIT_SAMPLES,
                        lo: float = None, hi: float = None):
    """Sample the block's 1-DOF motion by sweeping the shared crease.

    The branch pair selects the motion at the first (window-centre) sample;
    the sweep then continues outward by continuity, since the branch letter
    is a fold-sign convention that can swap solution sheets mid-motion.
    Returns rows (t_E_top, t_E_bot, t_W_top, t_W_bot, t_shared); samples
    where a transfer fails, the state is flat, or a fold sits too close to
    +-pi are skipped.
    """
    if isinstance(unit_or_pair, LinearUnit):
        top, bot = unit_or_pair.top, unit_or_pair.bottom
        if branches is None:
            branches = unit_or_pair.branches
    else:
        top, bot = unit_or_pair
    b_top, b_bot = branches

    def feasible(rho):
        try:
            return (
                try_solve_driven(top, C_S, rho, b_top) is not None
                and try_solve_driven(bot, C_N, rho, b_bot) is not None
            )
        except DegenerateVertexError:
            return False

    if lo is None or hi is None:
        grid = np.linspace(0.02, math.pi - 0.05, 60)
        ok = [r for r in grid if feasible(float(r))]
        if not ok:
            ok = [r for r in -grid if feasible(float(r))]
        if not ok:
            return np.empty((0, 5))
        lo, hi = min(ok), max(ok)
        # stay away from the window ends: solution sheets collide there and
        # the continuation could hop onto a frozen mode
        lo, hi = lo + 0.08 * (hi - lo), hi - 0.08 * (hi - lo)

    # two monotone sweeps outward from the window centre
    sweep = np.linspace(lo, hi, n)
    centre = int(np.argmin(np.abs(sweep - 0.5 * (lo + hi))))
    rows = [None] * n
    for idxs in (range(centre, n), range(centre, -1, -1)):
        hist_top: list = []
        hist_bot: list = []
        for idx in idxs:
            rho = float(sweep[idx])
            f_top = _continued(top, C_S, rho, b_top, hist_top)
            f_bot = _continued(bot, C_N, rho, b_bot, hist_bot)
            if f_top is None or f_bot is None:
                continue
            if max(abs(v) for v in f_top + f_bot) > math.pi - 1e-3:
                continue
            rows[idx] = (
                math.tan(0.5 * f_top[C_E]),
                math.tan(0.5 * f_bot[C_E]),
                math.tan(0.5 * f_top[C_W]),
                math.tan(0.5 * f_bot[C_W]),
                math.tan(0.5 * rho),
            )
    return np.array([r for r in rows if r is not None])


def _fit_through_origin(y, x):
    keep = np.abs(x) > 1e-9
    if keep.sum() < 3:
        return math.nan, math.inf
    xs, ys = x[keep], y[keep]
    c = float(xs @ ys / (xs @ xs))
    scale = max(1.0, float(np.abs(ys).max()))
    resid = float(np.abs(ys - c * xs).max()) / scale
    return c, resid


def fit_unit_laws(rows):
    """((c, resid_east), (c', resid_west)) from motion samples."""
    if len(rows) < 4:
        return (math.nan, math.inf), (math.nan, math.inf)
    te_top, te_bot, tw_top, tw_bot = rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3]
    return _fit_through_origin(te_top, te_bot), _fit_through_origin(tw_top, tw_bot)


def estimate_linear_coefficient(unit: LinearUnit, n: int = FIT_SAMPLES):
    """Fit the unit's two proportionality laws over its sampled motion.

    Returns (c, c_prime, fit_residual) with c the east-port and c_prime the
    west-port constant; raises NonlinearUnitError when the worst relative
    fit deviation exceeds the linearity gate, and SolverFailedError when too
    little of the motion is reachable to fit at all.
    """
    rows = unit_motion_samples(unit, n=n)
    if len(rows) < max(4, n // 3):
        raise SolverFailedError("unit motion is mostly unreachable; cannot fit")
    (c, r1), (c_prime, r2) = fit_unit_laws(rows)
    resid = max(r1, r2)
    if not math.isfinite(resid) or resid > LINEAR_FIT_TOL:
        raise NonlinearUnitError(
            f"tan-half law fit residual {resid:.3e} exceeds {LINEAR_FIT_TOL:.0e}",
            best_residual=resid,
        )
    return c, c_prime, resid


def select_branches(top, bottom, score=None):
    """Pick the (top, bottom) branch pair whose motion keeps the shared
    crease moving and fits the linear laws best.

    `score(c, c_prime)` may bias the choice (e.g. towards a kappa target);
    by default the fit residual decides.  Returns (branches, c, c_prime)."""
    best = None
    for pair in _BRANCH_PAIRS:
        rows = unit_motion_samples((top, bottom), pair, n=11)
        if len(rows) < 5:
            continue
        moving = np.abs(rows).max(axis=0)
        if moving.min() < 1e-6:
            continue  # some crease stays frozen: a (semi-)trivial mode
        (c, r1), (cp, r2) = fit_unit_laws(rows)
        resid = max(r1, r2)
        if not math.isfinite(resid):
            continue
        s = resid if score is None else score(c, cp) + resid
        if best is None or s < best[0]:
            best = (s, pair, c, cp)
    if best is None:
        raise SolverFailedError("no branch pair yields a usable unit motion")
    return best[1], best[2], best[3]


# ---------------------------------------------------------------------------
# kind constructors
# ---------------------------------------------------------------------------

def _kappa_pairs(target: float):
    """(p, q) pairs whose sin- or cos-flavoured half-angle coefficient equals
    `target`, parametrized by the half-difference d = (p - q)/2."""
    lo = 0.12
    out = []
    for d in np.linspace(-math.pi / 2 + 0.05, math.pi / 2 - 0.05, 121):
        if abs(d) < 1e-3:
            continue
        # sin flavour: sin(d) / sin(u) = target with u = (p + q)/2
        s = math.sin(d) / target
        if abs(s) <= 0.999:
            for u in (math.asin(s), math.pi - math.asin(s)):
                p, q = u + d, u - d
                if lo < p < math.pi - lo and lo < q < math.pi - lo:
                    out.append((p, q))
        # cos flavour: cos(d) / cos(u) = target
        cv = math.cos(d) / target
        if abs(cv) <= 0.999:
            u = math.acos(cv)
            p, q = u + d, u - d
            if lo < p < math.pi - lo and lo < q < math.pi - lo:
                out.append((p, q))
    return out


def make_unit_51(alpha, beta, variant="b", flavor="sin", mismatch=False) -> LinearUnit:
    """Kind 5.1: both vertices (anti)isograms.

    The unit's east-port constant c is calibrated to kappa_sin(alpha, beta)
    or kappa_cos(alpha, beta) according to `flavor`; `mismatch=True` skips
    the calibration and pairs two raw vertices on inconsistent coefficient
    flavours (for degeneration experiments).  variant (b) uses antiisograms
    (developable); variant (a) uses isograms.
    """
    if abs(alpha - beta) < 1e-6:
        raise InfeasibleAngleError(0, 0, 0.0)
    kappa = {"sin": kappa_sin, "cos": kappa_cos}[flavor](alpha, beta)

    if variant == "b":
        top = (alpha, beta, math.pi - alpha, math.pi - beta)
        make_bottom = lambda p, q: (p, q, math.pi - p, math.pi - q)
    else:
        top = (alpha, beta, alpha, beta)
        make_bottom = lambda p, q: (p, q, p, q)

    if mismatch:
        bottom = make_bottom(beta, alpha)
        branches, c, cp = select_branches(top, bottom)
        return LinearUnit(top, bottom, "5.1", variant, branches)

    # search the bottom-vertex coefficient that lands the composed unit
    # constant exactly on kappa; the top vertex's own per-branch constants
    # are the four half-angle coefficient flavours, so the bottom target is
    # kappa divided by one of them (sign and direction settled by probing)
    ks, kc = kappa_sin(alpha, beta), kappa_cos(alpha, beta)
    targets = []
    for t_top in (ks, -ks, kc, -kc, 1.0 / ks, -1.0 / ks, 1.0 / kc, -1.0 / kc):
        targets.append(kappa / t_top)
    best = None
    seen = set()
    for candidate in targets:
        key = round(candidate, 12)
        if key in seen:
            continue
        seen.add(key)
        for p, q in _kappa_pairs(candidate)[:6]:
            bottom = make_bottom(p, q)
            try:
                branches, c, cp = select_branches(
                    top, bottom, score=lambda c, cp: abs(c - kappa)
                )
            except SolverFailedError:
                continue
            err = abs(c - kappa)
            if best is None or err < best[0]:
                best = (err, bottom, branches)
            if err < 1e-12:
                break
        if best is not None and best[0] < 1e-12:
            break
    if best is None or best[0] > 1e-9:
        raise SolverFailedError(
            f"could not calibrate a 5.1 unit to kappa({math.degrees(alpha):.1f}deg, "
            f"{math.degrees(beta):.1f}deg)"
        )
    _, bottom, branches = best
    return LinearUnit(top, bottom, "5.1", variant, branches)


def _deltoid_match_residual(x, y, z, w):
    """Matching condition for two mirror deltoids (x,y,y,x)/(z,w,w,z) to
    compose into a linear unit; identically zero in the developable case."""
    q1 = math.cos(2 * y - x) - math.cos(x)
    s1 = math.cos(2 * y + x) - math.cos(x)
    e1 = math.sin(y) * math.sin(x)
    r2 = math.cos(2 * z - w) - math.cos(w)
    s2 = math.cos(2 * z + w) - math.cos(w)
    e2 = math.sin(w) * math.sin(z)
    return e2 * e2 * q1 * s1 - e1 * e1 * r2 * s2


def make_unit_52(x, z, y=None, w_guess=None, variant="b") -> LinearUnit:
    """Kind 5.2: two mirror-symmetric deltoids (x, y, y, x) over (z, w, w, z).

    variant (b): developable (y = pi - x, w = pi - z); any (x, z) works.
    variant (a): y is a free input and w is solved from the matching
    condition that makes the composed law exactly linear.
    """
    if variant == "b":
        top = (x, math.pi - x, math.pi - x, x)
        bottom = (z, math.pi - z, math.pi - z, z)
    else:
        if y is None:
            raise ValueError("variant (a) needs the top deltoid's second angle y")
        top = (x, y, y, x)
        w = _solve_scalar(
            lambda w: _deltoid_match_residual(x, y, z, w),
            w_guess if w_guess is not None else y,
        )
        bottom = (z, w, w, z)
    branches, c, cp = select_branches(top, bottom)
    return LinearUnit(top, bottom, "5.2", variant, branches)


def _solve_scalar(fun, x0, lo=0.08, hi=math.pi - 0.08):
    """Root of a scalar equation on (lo, hi): locate a sign change on a grid
    near x0 and bisect."""
    grid = np.concatenate([[x0], np.linspace(lo, hi, 181)])
    vals = [fun(g) for g in grid]
    order = np.argsort(np.abs(grid - x0))
    best = None
    for idx in order:
        g, v = grid[idx], vals[idx]
        for jdx in order:
            g2, v2 = grid[jdx], vals[jdx]
            if g2 <= g or v * v2 > 0:
                continue
            a, b, fa = g, g2, v
            for _ in range(80):
                m = 0.5 * (a + b)
                fm = fun(m)
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
            root = 0.5 * (a + b)
            err = abs(fun(root))
            if best is None or err < best[0]:
                best = (err, root)
            break
        if best is not None and best[0] < 1e-12:
            break
    if best is None:
        raise SolverFailedError("no real solution of the matching condition")
    return best[1]


def make_unit_53(x, p, q, variant="b") -> LinearUnit:
    """Kind 5.3: a developable deltoid (x, pi-x, pi-x, x) over an
    antiisogram (p, q, pi-p, pi-q); both vertices are developable, so only
    the (b) variant exists."""
    if variant != "b":
        raise InfeasibleAngleError(0, 0, 0.0)
    top = (x, math.pi - x, math.pi - x, x)
    bottom = (p, q, math.pi - p, math.pi - q)
    branches, c, cp = select_branches(top, bottom)
    return LinearUnit(top, bottom, "5.3", variant, branches)


def make_unit_54(seed=None, rng=None, starts=40) -> LinearUnit:
    """Kind 5.4: two conic vertices co-solved so the composite law is linear.

    Solves all eight sector angles against the linearity defect of the
    sampled motion, gated away from the named vertex classes; the kind has
    no developable variant.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    margin = 0.12

    def class_penalties(v):
        a1, a2, a3, a4 = v
        pi = math.pi
        dists = [
            abs(a1 - a3) + abs(a2 - a4),                          # isogram
            abs(a1 + a3 - pi) + abs(a2 + a4 - pi),                # antiisogram
            min(abs(a1 - a2) + abs(a3 - a4), abs(a2 - a3) + abs(a4 - a1)),
            min(abs(a1 + a2 - pi) + abs(a3 + a4 - pi),
                abs(a2 + a3 - pi) + abs(a4 + a1 - pi)),
            abs(a1 + a2 + a3 + a4 - 2 * pi),                      # developable
        ]
        return [max(0.0, margin - d) for d in dists]

    def defect(u):
        top, bottom = tuple(u[:4]), tuple(u[4:])
        rows = unit_motion_samples((top, bottom), (BRANCH_A, BRANCH_A), n=11)
        gates = np.array(class_penalties(top) + class_penalties(bottom))
        if len(rows) < 6 or np.abs(rows).max(axis=0).min() < 1e-6:
            return np.concatenate([np.full(22, math.pi), gates])
        out = np.zeros(22)
        for block, (y, xv) in enumerate(((rows[:, 0], rows[:, 1]),
                                         (rows[:, 2], rows[:, 3]))):
            keep = np.abs(xv) > 1e-9
            if keep.sum() < 3:
                return np.concatenate([np.full(22, math.pi), gates])
            cc = float(xv[keep] @ y[keep] / (xv[keep] @ xv[keep]))
            out[block * 11 : block * 11 + len(xv)] = y - cc * xv
        return np.concatenate([out, gates])

    if seed is None:
        seed = np.array([1.35, 1.0, 1.5, 1.15, 1.2, 1.45, 0.95, 1.3])
    sys = ResidualSystem(defect, 8, seed_guess=np.asarray(seed, dtype=float),
                         lower=0.3, upper=math.pi - 0.3, name="unit 5.4")
    out = solve(sys, starts=starts, tol=1e-10, rng=rng)
    if not out.success:
        raise SolverFailedError(
            "no conic pair with a linear law found "
            f"(best residual {out.residual_norm:.3e})",
            best_residual=out.residual_norm,
        )
    top, bottom = tuple(out.x[:4]), tuple(out.x[4:])
    for v in (top, bottom):
        tag = classify_vertex(SectorAngles(*v), tol=1e-6).tag
        if tag not in ("conic", "elliptic", "multiple"):
            raise SolverFailedError(f"5.4 solve degenerated to a {tag} vertex")
    branches, c, cp = select_branches(top, bottom)
    return LinearUnit(top, bottom, "5.4", "a", branches)


def make_unit_55(x, y, variant="b") -> LinearUnit:
    """Kind 5.5: two mirrored antideltoids, the unit of the parallel
    repeating family; folds pass through with c = c' = 1.  Antideltoids are
    intrinsically developable, so only the (b) variant exists."""
    if variant != "b":
        raise InfeasibleAngleError(0, 0, 0.0)
    top = (x, y, math.pi - y, math.pi - x)
    bottom = (y, x, math.pi - x, math.pi - y)
    branches, c, cp = select_branches(top, bottom)
    return LinearUnit(top, bottom, "5.5", "b", branches)


def make_unit(kind: str, variant: str = "b", params=(), rng=None) -> LinearUnit:
    """Construct a linear unit of the requested kind from its free angles."""
    if kind == "5.1":
        return make_unit_51(*params, variant=variant)
    if kind == "5.2":
        return make_unit_52(*params, variant=variant)
    if kind == "5.3":
        return make_unit_53(*params, variant=variant)
    if kind == "5.4":
        return make_unit_54(params if len(params) else None, rng=rng)
    if kind == "5.5":
        return make_unit_55(*params, variant=variant)
    raise ValueError(f"unknown unit kind {kind!r}")
