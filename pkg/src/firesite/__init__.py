"""Two-tier emergency facility siting: risk scoring, analytic sizing,
covering models solved by evolutionary algorithms, and exact small-instance
oracles."""

__version__ = "0.1.0"

from .kernels import USING_NUMBA

__all__ = ["USING_NUMBA", "__version__"]
