"""Numerical checks for complex curves of simple type: torsion weights,
Vandermonde-type Jacobians, root-adapted convex decompositions, sampled
lower bounds and extension-operator quadrature."""

from .curves import OffspringCurve, SimpleCurve
from .polycx import CPolynomial

__all__ = ["CPolynomial", "SimpleCurve", "OffspringCurve"]
__version__ = "0.1.0"
