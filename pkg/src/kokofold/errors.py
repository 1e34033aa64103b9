"""Exception types shared across the package."""


class KokofoldError(Exception):
    """Base class for all library errors."""


class RangeViolation(KokofoldError, ValueError):
    """An angle or length is outside its admissible open interval."""


class FlatCreaseError(KokofoldError, ValueError):
    """A sector angle equals pi, which reduces the vertex to a plain crease."""


class NoSolutionError(KokofoldError):
    """The driving angle lies outside the reachable interval of the vertex."""


class DegenerateVertexError(KokofoldError):
    """The vertex is a cross (or numerically indistinguishable from one);
    the folding-angle transfer is not locally unique."""


class PanelSumViolation(KokofoldError, ValueError):
    """An inner panel's four corner angles do not sum to 2*pi."""

    def __init__(self, i, j, total):
        self.panel = (i, j)
        self.total = total
        super().__init__(f"panel ({i}, {j}) corner angles sum to {total!r}, expected 2*pi")


class InfeasibleAngleError(KokofoldError):
    """A generator recursion produced |cos gamma| > 1 at some step."""

    def __init__(self, i, j, value):
        self.position = (i, j)
        self.value = value
        super().__init__(f"no real sector angle at step ({i}, {j}): |cos| = {abs(value):.6g} > 1")


class CrossProducedError(KokofoldError):
    """A generator produced a cross vertex, which kinematic transfer rejects."""


class SolverFailedError(KokofoldError):
    """All multi-start attempts of the nonlinear solver failed to converge."""

    def __init__(self, message, best_residual=None, step=None):
        self.best_residual = best_residual
        self.step = step
        super().__init__(message)


class EmptyIntervalError(KokofoldError):
    """A requested fold-path interval contains no solvable driving angle."""


class BoundaryMismatchError(KokofoldError):
    """Rows to be appended are incompatible with the base pattern boundary."""


class InconsistentStateError(KokofoldError):
    """A fold state does not close well enough to embed as a rigid mesh."""


class PatternFormatError(KokofoldError, ValueError):
    """A pattern document is malformed or carries unknown keys."""
