"""Trace formulas for Toeplitz semi-commutators on weighted Bergman spaces.

Both sides of each identity are computed independently: truncated operator
matrices on one side, geometric integrals against radial profiles on the other.
"""

from .geometry import SpaceParams, MobiusFrame, DomainError

__version__ = "0.1.0"

__all__ = ["SpaceParams", "MobiusFrame", "DomainError", "__version__"]
