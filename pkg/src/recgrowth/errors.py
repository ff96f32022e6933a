"""Exception hierarchy shared by all solvers."""

from __future__ import annotations

__all__ = [
    "RecGrowthError",
    "AssumptionViolated",
    "DomainError",
    "InverseDomainError",
    "InvalidBracket",
    "NoConvergence",
    "NoEquilibrium",
    "NoEquilibriumInBracket",
    "InnerNoConvergence",
    "SingularSystem",
    "DegenerateDenominator",
    "DegenerateClassification",
    "NoCrossing",
    "BracketFailure",
    "ComplexRootsPresent",
]


class RecGrowthError(Exception):
    """Base class for every error raised by the package."""


class AssumptionViolated(RecGrowthError):
    """A model fails one or more structural assumptions.

    Parameters
    ----------
    failures : list of str
        Names of the failed checks, e.g. ``["U2"]``.
    """

    def __init__(self, failures: list[str], detail: str = ""):
        self.failures = list(failures)
        msg = "assumptions violated: " + ", ".join(self.failures)
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DomainError(RecGrowthError, ValueError):
    """Argument outside the domain of a functional family."""


class InverseDomainError(DomainError):
    """Value outside ``[alpha0, alpha_bar)`` passed to the discount inverse."""


class InvalidBracket(RecGrowthError, ValueError):
    """Bracket endpoints do not straddle a sign change."""


class NoConvergence(RecGrowthError):
    """An iterative method exhausted its iteration budget."""


class NoEquilibrium(RecGrowthError):
    """A steady-state scan found no sign change."""


class NoEquilibriumInBracket(NoEquilibrium):
    """The admissible bracket contains no sign change."""


class InnerNoConvergence(NoConvergence):
    """The deflator fixed-point loop failed to settle."""


class SingularSystem(RecGrowthError):
    """A linear system determinant is numerically zero."""


class DegenerateDenominator(RecGrowthError):
    """A closed-form expression has a vanishing denominator."""


class DegenerateClassification(RecGrowthError):
    """Parameters sit on a boundary between stability regions."""

    def __init__(self, boundary: str):
        self.boundary = boundary
        super().__init__(f"degenerate classification: {boundary}")


class NoCrossing(RecGrowthError):
    """Marginal-benefit curves fail to cross on the search interval."""


class BracketFailure(RecGrowthError):
    """An inner root-solve could not bracket its root."""


class ComplexRootsPresent(RecGrowthError):
    """A characteristic polynomial has a complex-conjugate pair."""
