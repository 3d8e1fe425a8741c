"""Error types raised by the capacity solvers."""

from __future__ import annotations

from dataclasses import dataclass


class CapacityError(Exception):
    """Base class for every error raised by polytope_capacity."""


class ValidationError(CapacityError, ValueError):
    """Input data does not describe a valid object."""


class InvalidDimensionError(ValidationError):
    """Odd ambient dimension or mismatched vector sizes."""


class InvalidPermutationError(ValidationError):
    pass


class InvalidFrameError(ValidationError):
    """Coisotropic frame with k outside [0, n)."""


class NotSymplecticError(ValidationError):
    pass


class PreconditionError(ValidationError):
    pass


class HypothesisViolationError(CapacityError):
    """A hypothesis of the capacity formula does not hold.

    The message names the failed clause.
    """


class NoInteriorPointError(HypothesisViolationError):
    pass


class DegenerateCutError(HypothesisViolationError):
    pass


class InfeasibleError(HypothesisViolationError):
    """No permutation admits a feasible point with positive objective."""


class BudgetExceededError(CapacityError):
    pass


class ReconstructionError(CapacityError):
    """Facet anchoring of a reconstructed path failed."""


@dataclass(frozen=True)
class Infeasible:
    """Typed infeasibility outcome, returned instead of raised."""

    reason: str

    def __bool__(self) -> bool:
        return False
