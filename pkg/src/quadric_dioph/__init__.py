"""Intrinsic Diophantine approximation on rational quadrics."""

__version__ = "0.1.0"

from .quadform import QuadraticForm, good_form, hyperbolic_normalize, inertia  # noqa: E402
from .points import enumerate_array, qrank_bounds, RationalProjectivePoint  # noqa: E402
from .geometry import RealProjectivePoint, dist  # noqa: E402

__all__ = [
    "QuadraticForm", "good_form", "hyperbolic_normalize", "inertia",
    "enumerate_array", "qrank_bounds", "RationalProjectivePoint",
    "RealProjectivePoint", "dist", "__version__",
]
