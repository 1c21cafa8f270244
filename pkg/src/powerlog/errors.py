"""Exception hierarchy.

Two families matter for the CLI exit-code contract: ``ParseError`` (and its
subclasses) map to exit code 1, ``DomainError`` subclasses map to exit code 2.
"""

from __future__ import annotations


class PowerlogError(Exception):
    """Base class for all library errors."""


class ParseError(PowerlogError):
    """Malformed series text.

    Carries the character position and the set of tokens that would have been
    acceptable there.
    """

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        super().__init__(message)
        self.position = position
        self.expected = expected

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        base = super().__str__()
        if self.expected:
            return f"{base} at position {self.position} (expected {', '.join(self.expected)})"
        return f"{base} at position {self.position}"


class NonPositiveAlpha(ParseError):
    """A power of x with exponent <= 0 outside ambient mode."""


class DomainError(PowerlogError):
    """A mathematically well-formed request that the domain rules reject."""


class ZeroSeries(DomainError):
    """Operation needs a nonzero series (no stored terms on the region)."""


class NotLH(DomainError):
    """Series violates the log-free positive leading term hypothesis."""


class NotParabolic(DomainError):
    pass


class NotL0(DomainError):
    """Change of variables is not of the form a*x + h.o.t. with a > 0."""


class NotStronglyHyperbolic(DomainError):
    pass


class StronglyHyperbolicNotEmbeddable(DomainError):
    """Strongly hyperbolic series admit no C^1 flow embedding."""


class NeedsFloatMode(DomainError):
    """Exact mode hit a transcendental constant (log, exp, irrational root)."""


class NoFlow(DomainError):
    """Vector field coefficient has order below x, so no C^1 flow exists."""


class NonConvergence(DomainError):
    """Weak summation failed to stall within the iteration cap."""


class EmptyRegion(DomainError):
    """Region propagation produced a rectangle with no positive exponents."""


class RegionExhausted(DomainError):
    """Propagation shrank the exactness region below the requested target."""

    def __init__(self, message: str, achieved=None, requested=None):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class NotApplicable(DomainError):
    """Requested change of variables is not admissible for this slot."""


class IrrationalExponent(DomainError):
    """Flow time would take a rational exponent outside the rationals."""


class NoSolution(DomainError):
    """Homological equation has no solution at this slot."""
