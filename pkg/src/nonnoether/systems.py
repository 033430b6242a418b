"""Built-in example systems."""

from __future__ import annotations

from .symcheck import PhaseSystem

TODA_COORDS = ("z1", "z2", "z3", "z4")
TODA_W = [(1, 3, "1"), (2, 4, "1")]
TODA_H = "1/2*z1^2 + 1/2*z2^2 + exp(z3 - z4)"
TODA_E = [
    "1/2*z1^2 - exp(z3 - z4) - t/2*(z1 + z2)*exp(z3 - z4)",
    "1/2*z2^2 + 2*exp(z3 - z4) + t/2*(z1 + z2)*exp(z3 - z4)",
    "2*z1 + 1/2*z2 + t/2*(z1^2 + exp(z3 - z4))",
    "z2 - 1/2*z1 + t/2*(z2^2 + exp(z3 - z4))",
]


def toda() -> PhaseSystem:
    """Two-particle non-periodic Toda chain with a time-dependent generator."""
    return PhaseSystem.from_strings(TODA_COORDS, TODA_W, TODA_H, TODA_E)
