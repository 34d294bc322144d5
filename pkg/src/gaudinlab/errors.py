"""Exception hierarchy shared by all modules.

Every error raised for bad input derives from ``InvalidInputError`` (a
``ValueError``) so the command line can map it to exit code 2.
"""


class GaudinLabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(GaudinLabError, ValueError):
    pass


class UnsupportedWeightError(InvalidInputError):
    pass


class UnsupportedAlgebraError(InvalidInputError):
    pass


class CoincidingPointsError(InvalidInputError):
    pass


class CollisionError(InvalidInputError):
    """Roots collide with each other or with a marked point."""


class SingularEvaluationError(InvalidInputError):
    """Evaluation requested at a pole."""


class ResidueSumError(InvalidInputError):
    pass


class TracelessnessError(InvalidInputError):
    pass


class UnsupportedColorError(InvalidInputError):
    pass


class DegenerateTransitionError(InvalidInputError):
    pass


class LatticeSingularityError(InvalidInputError):
    pass


class ContourTooCloseError(InvalidInputError):
    pass


class TruncationOverflowError(InvalidInputError):
    pass


class DegenerateSpectrumError(GaudinLabError):
    """Random linear combination kept producing a repeated eigenvalue."""


class ZeroVectorError(GaudinLabError):
    pass


class StepUnderflowError(GaudinLabError):
    pass


class ResonanceObstructionError(GaudinLabError):
    """A resonant Riccati step has a non-vanishing obstruction."""

    def __init__(self, step, value):
        super().__init__(f"Riccati recursion obstructed at n={step}: {value!r}")
        self.step = step
        self.value = value
