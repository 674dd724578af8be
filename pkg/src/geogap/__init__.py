"""Geodesically equivalent metrics built from finite-gap Schrodinger operators.

The subpackages follow the construction: Weierstrass functions
(:mod:`~geogap.elliptic`), solutions of s'' = (u + z) s
(:mod:`~geogap.schrodinger`), the metric and its curvature
(:mod:`~geogap.metrize`), geodesics (:mod:`~geogap.geodesic`) and the Lame
spectral data (:mod:`~geogap.lame`).
"""

from .errors import ConfigError, GeogapError, NumericalError
from .metrize import MetricParams, metric_at, projective_coeffs
from .scenario import Scenario
from .schrodinger import lame_basis, rational_basis

__all__ = ["ConfigError", "GeogapError", "MetricParams", "NumericalError", "Scenario",
           "lame_basis", "metric_at", "projective_coeffs", "rational_basis"]
