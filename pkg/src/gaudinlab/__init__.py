"""Numerical laboratory for the sl2/sl3 Gaudin model.

Gaudin hamiltonians and an exact-diagonalization oracle, Bethe ansatz
equations and completeness audits, opers and the Miura transformation,
Riccati obstructions, Fuchsian monodromy, separation of variables and the
q-difference TQ relation.
"""

from .errors import GaudinLabError, InvalidInputError
from .gaudin import GaudinProblem, sl2_problem
from .bethe import BetheConfiguration

__version__ = "0.1.0"

__all__ = [
    "GaudinLabError",
    "InvalidInputError",
    "GaudinProblem",
    "sl2_problem",
    "BetheConfiguration",
    "__version__",
]
