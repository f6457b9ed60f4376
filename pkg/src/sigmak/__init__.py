"""Entire spacelike hypersurfaces of constant sigma-k curvature in Minkowski space.

Construction and verification toolkit: symmetric-function operators, graph and
Legendre-dual geometry, semitrough profiles, barrier envelopes, a damped-Newton
Dirichlet solver on convex subdomains of the unit ball, and reconstruction
checks for the resulting entire graphs.
"""

__version__ = "0.1.0"

from . import caps, errors, symfunc  # noqa: F401
