"""Exception taxonomy shared across the package.

Numerical routines distinguish between caller errors (bad arguments,
violated preconditions) and run-time failures of an iteration (no
bracket for a root, line search stall). The latter carry whatever
partial state was computed so callers can salvage diagnostics.
"""


class StretchLabError(Exception):
    """Base class for all package errors."""


class InvariantViolation(StretchLabError):
    """A geometric or algebraic precondition does not hold.

    Raised e.g. when a point fails the hyperboloid membership test,
    a vector expected to be timelike is not, or configuration
    parameters are outside their admissible range.
    """


class NoBracket(StretchLabError):
    """A bisection could not bracket the requested target value.

    Attributes
    ----------
    attained : tuple | None
        (low, high) range of the objective that was reachable.
    """

    def __init__(self, msg, attained=None):
        super().__init__(msg)
        self.attained = attained


class LineSearchFailed(StretchLabError):
    """Armijo backtracking underflowed the trial step.

    Carries the best iterate found so far in ``result`` so partial
    progress is not lost.
    """

    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


class DegenerateMap(StretchLabError):
    """An operation that divides by the energy met J_p = 0."""
