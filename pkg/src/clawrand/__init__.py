"""Lattice-based claw-free functions with trapdoors, the interactive
protocols built on them (quantumness testing and randomness expansion),
an exact micro-scale simulation of the honest quantum prover, device
overlap analysis, and Toeplitz extraction.

Desk-scale parameter profiles are cryptographically toy by construction;
every profile reports which validity conditions it violates.
"""

from .modq import ModRing, SizeGuardError
from .profiles import PROFILES, ParameterProfile, get_profile

__all__ = [
    "ModRing",
    "SizeGuardError",
    "PROFILES",
    "ParameterProfile",
    "get_profile",
]

__version__ = "0.1.0"
