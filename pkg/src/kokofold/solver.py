"""Damped least-squares solving of sector-angle systems.

All pattern generators that cannot write their angles in closed form reduce
to the same shape of problem: a handful of unknown sector angles in (0, pi),
a residual vector mixing panel sums, family constraints and loop-closure
samples, and heavy sensitivity to the starting point.  This module provides
a small Levenberg-Marquardt implementation with a numeric Jacobian and
seeded multi-start, plus the quadrilateral-by-quadrilateral driver used to
assemble patterns step by step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverFailedError

LM_LAMBDA0 = 1e-3
LM_TOL = 1e-10
LM_MAX_ITER = 200
LM_JAC_STEP = 1e-7
DEFAULT_STARTS = 32
BOUND_MARGIN = 1e-9     # clamp iterates this far inside (0, pi)
BOUND_REJECT = 1e-12    # reject solutions this close to 0 or pi


@dataclass
class ResidualSystem:
    """A bounded nonlinear least-squares problem over sector angles.

    `residual` maps an unknown vector (angles in (0, pi), unless custom
    bounds are given) to a residual vector; more residuals than unknowns is
    fine.  The evaluator must be deterministic.
    """

    residual: callable
    n_unknowns: int
    seed_guess: np.ndarray = None
    lower: float = 0.0
    upper: float = math.pi
    name: str = "system"

    def __post_init__(self):
        if self.seed_guess is not None:
            self.seed_guess = np.asarray(self.seed_guess, dtype=float)
            if self.seed_guess.shape != (self.n_unknowns,):
                raise ValueError("seed_guess length must match n_unknowns")


@dataclass
class SolveOutcome:
    """Result of a multi-start solve."""

    success: bool
    x: np.ndarray
    residual_norm: float
    iterations: int
    starts_attempted: int

    def require(self, context=""):
        if not self.success:
            raise SolverFailedError(
                f"{context or 'solve'} failed: best residual {self.residual_norm:.3e}",
                best_residual=self.residual_norm,
            )
        return self.x


def numeric_jacobian(fun, x, step: float = LM_JAC_STEP):
    """Central-difference Jacobian of fun at x."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fun(x), dtype=float)
    jac = np.empty((f0.size, x.size))
    for k in range(x.size):
        dx = np.zeros_like(x)
        dx[k] = step
        fp = np.asarray(fun(x + dx), dtype=float)
        fm = np.asarray(fun(x - dx), dtype=float)
        jac[:, k] = (fp - fm) / (2.0 * step)
    return jac


def _lm_single(fun, x0, lower, upper, tol, max_iter):
    """One LM run from x0; returns (x, norm, iterations)."""
    x = np.clip(np.asarray(x0, dtype=float), lower + BOUND_MARGIN, upper - BOUND_MARGIN)
    f = np.asarray(fun(x), dtype=float)
    norm = float(np.linalg.norm(f))
    lam = LM_LAMBDA0
    it = 0
    while it < max_iter and norm > tol:
        it += 1
        jac = numeric_jacobian(fun, x)
        jtj = jac.T @ jac
        jtf = jac.T @ f
        stepped = False
        for _ in range(24):
            try:
                delta = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj) + 1e-30), -jtf)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = np.clip(x + delta, lower + BOUND_MARGIN, upper - BOUND_MARGIN)
            f_new = np.asarray(fun(x_new), dtype=float)
            norm_new = float(np.linalg.norm(f_new))
            if math.isfinite(norm_new) and norm_new < norm:
                x, f, norm = x_new, f_new, norm_new
                lam = max(lam / 10.0, 1e-14)
                stepped = True
                break
            lam *= 10.0
        if not stepped:
            break
    return x, norm, it


def solve(
    sys: ResidualSystem,
    starts: int = DEFAULT_STARTS,
    tol: float = LM_TOL,
    max_iter: int = LM_MAX_ITER,
    rng=None,
) -> SolveOutcome:
    """Levenberg-Marquardt with multi-start.

    The seed guess (when given) is tried first, then `starts - 1` uniform
    random interior points.  The best converged solution wins; ties keep the
    earlier start, so a fixed rng seed makes the outcome reproducible.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    lo, hi = sys.lower, sys.upper

    guesses = []
    if sys.seed_guess is not None:
        guesses.append(sys.seed_guess)
    while len(guesses) < starts:
        guesses.append(rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo),
                                   size=sys.n_unknowns))

    best = None
    total_iters = 0
    attempted = 0
    for g in guesses:
        attempted += 1
        x, norm, it = _lm_single(sys.residual, g, lo, hi, tol, max_iter)
        total_iters += it
        interior = np.all(x > lo + BOUND_REJECT) and np.all(x < hi - BOUND_REJECT)
        if not interior:
            continue
        if best is None or norm < best[1]:
            best = (x, norm)
        if norm <= tol:
            break

    if best is None:
        return SolveOutcome(False, np.array([]), math.inf, total_iters, attempted)
    x, norm = best
    return SolveOutcome(norm <= tol, x, norm, total_iters, attempted)


def polynomialize(sys: ResidualSystem) -> ResidualSystem:
    """Reparametrize the unknowns by t = tan(angle/2), t in (0, inf).

    cos a = (1 - t^2)/(1 + t^2) and sin a = 2t/(1 + t^2), so the roots are
    unchanged while conditioning near a = pi/2 often improves.  The returned
    system's unknowns live in t-space; solve it and map back with
    2*atan(t)."""
    base = sys.residual

    def residual_t(t):
        return base(2.0 * np.arctan(t))

    seed = None
    if sys.seed_guess is not None:
        seed = np.tan(sys.seed_guess / 2.0)
    return ResidualSystem(
        residual=residual_t,
        n_unknowns=sys.n_unknowns,
        seed_guess=seed,
        lower=0.0,
        upper=1e8,
        name=sys.name + "[tan-half]",
    )


def angles_from_tanhalf(t):
    return 2.0 * np.arctan(np.asarray(t, dtype=float))


@dataclass
class QuadStep:
    """One step of the quadrilateral-by-quadrilateral design procedure."""

    build: callable        # solved-so-far dict -> ResidualSystem
    absorb: callable       # (solved dict, x) -> None; stores the step's angles
    name: str = "step"


def quad_by_quad(plan, starts=DEFAULT_STARTS, tol=LM_TOL, rng=None, check=None):
    """Execute an ordered list of QuadStep, each consuming only previously
    solved angles.

    After every step the optional `check` callback sees the growing state and
    may raise to abort.  Returns the final state dict; on failure raises
    SolverFailedError carrying the index of the failed step, with the state
    of the completed steps preserved on the exception as `.partial`.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    state: dict = {}
    for k, step in enumerate(plan):
        sys = step.build(state)
        out = solve(sys, starts=starts, tol=tol, rng=rng)
        if not out.success:
            err = SolverFailedError(
                f"step {k} ({step.name}) failed: best residual {out.residual_norm:.3e}",
                best_residual=out.residual_norm,
                step=k,
            )
            err.partial = state
            raise err
        step.absorb(state, out.x)
        if check is not None:
            check(state, k)
    return state
