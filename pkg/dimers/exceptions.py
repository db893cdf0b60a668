from __future__ import annotations


class DimerError(Exception):
    """Base class for every error raised by the dimer library."""

    exit_code = 1


class MalformedSpec(DimerError, ValueError):
    """A region, polygon, query or matching document could not be understood."""


class InfeasibleInput(DimerError):
    """The input is well formed but admits no answer (no cover, bad slope, ...)."""

    exit_code = 2


class FlipUnavailable(InfeasibleInput):
    """The requested face is not alternating in the current matching."""


class ToleranceFailure(DimerError):
    """A numeric routine stopped before reaching its configured tolerance."""

    exit_code = 3


class AmbiguousBranch(ToleranceFailure):
    """More than one root of the Burgers system lies in the upper half plane."""


__all__ = [
    "AmbiguousBranch",
    "DimerError",
    "FlipUnavailable",
    "InfeasibleInput",
    "MalformedSpec",
    "ToleranceFailure",
]
