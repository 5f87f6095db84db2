"""Exceptions raised by the netcore toolkit."""

from typing import Optional


class NetcoreError(Exception):
    """Base class for all netcore errors."""


class NonConvergence(NetcoreError):
    """A fixed-point or Newton iteration failed to settle."""


class OutsideDomain(NetcoreError):
    """A generating function was evaluated outside its disc of convergence."""


class NoSingularityFound(NetcoreError):
    """Neither the branch-point nor the critical search produced a root."""


class RegimeInconsistency(NetcoreError):
    """The sign of Φ_z disagrees with the branch taken by the singularity search."""


class SingularSystem(NetcoreError):
    """The linear system for the draw-counter densities is (numerically) singular."""


class MissingGraphList(NetcoreError):
    """A table class has counts for (n, m) but no explicit graphs to sample from."""


class Aborted(NetcoreError):
    """The sampler exceeded its labeled-vertex budget."""


class RecursionBudgetExceeded(NetcoreError):
    """The sampler work stack grew past the configured safety valve."""


class AssemblyConflict(NetcoreError):
    """Substitution would create a parallel edge in a simple network."""


class PoleEdgeConflict(NetcoreError):
    """The pole edge was requested but the network already contains it."""


class NotANetwork(NetcoreError):
    """The graph handed to the oracle is not a valid network."""


class CoefficientOverflow(NetcoreError, OverflowError):
    """An unscaled series coefficient (or its egf count) does not fit in a float."""


class ClassSpecError(NetcoreError, ValueError):
    """A core-class specification string could not be parsed."""


class AttemptsExhausted(NetcoreError):
    """
    Rejection sampling gave up.

    Attributes:
        attempts: Number of Boltzmann runs performed
        hits: Runs that landed in the size window among those attempts
    """

    def __init__(self, attempts: int, hits: int = 0, message: Optional[str] = None):
        self.attempts = attempts
        self.hits = hits
        super().__init__(
            message
            or f"Size window not reached after {attempts} attempts "
               f"({hits} hits, acceptance rate {self.acceptance_rate:.3g})"
        )

    @property
    def acceptance_rate(self) -> float:
        """Observed hits per attempt."""
        return self.hits / self.attempts if self.attempts else 0.0

    def __reduce__(self):
        return type(self), (self.attempts, self.hits, str(self))


class TableParseError(NetcoreError, ValueError):
    """
    A coefficient table file contains a malformed line.

    Attributes:
        line_number: 1-based number of the offending line
    """

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class TableValidationError(NetcoreError, ValueError):
    """A coefficient table violates its invariants."""
