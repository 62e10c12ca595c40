"""siscert: stability certificates for spatially interconnected systems.

Decides exponential stability of linear systems coupled along L spatial
directions (infinite or periodic interconnections) by reducing the question
to positivity of trigonometric polynomials on the unit multicircle, proved
with sum-of-squares semidefinite programming and cross-checked by an
independent sampling/simulation oracle.
"""

from .trigpoly import QC, TrigPoly

__version__ = "0.1.0"

__all__ = ["QC", "TrigPoly", "__version__"]
