"""Heat kernels of the polyharmonic operator and the semilinear problem
u_t + (-Delta)^m u = |u|^p with measure initial data."""

from .errors import PolyheatError
from .params import ProblemParams

__version__ = "0.1.0"

__all__ = ["PolyheatError", "ProblemParams", "__version__"]
