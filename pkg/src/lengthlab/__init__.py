"""Computational laboratory for geodesic length spaces.

Chart-complex spaces, model-space comparison geometry, conjugate-point
detectors, cut loci and injectivity radii, bridges and fans.
"""
__version__ = "0.1.0"

from .chart_spaces import CATALOG, build, load_space, parse_point  # noqa: E402
from .model_space import comparison_triangle, model_distance  # noqa: E402

__all__ = ["CATALOG", "build", "load_space", "parse_point", "comparison_triangle",
           "model_distance", "__version__"]
