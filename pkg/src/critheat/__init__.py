"""Numerical laboratory for the focusing energy-critical heat equation
u_t = Delta u + |u|^2 u on R^4, restricted to radial symmetry.

Subpackages cover the radial discretization (`grid`), the static bubble and
its variational constants (`ground_state`), adaptive IMEX time integration
(`evolve`), trajectory identities (`diagnostics`), convexity blow-up
criteria (`blowup`), bubble extraction (`profiles`) and the experiment
harness with its CLI (`harness`, `config`, `cli`).
"""

from .grid import RadialField, RadialGrid, make_grid
from .ground_state import GroundState, VariationalConstants, compute_constants
from .evolve import EvolveConfig, simulate

__all__ = [
    "RadialField",
    "RadialGrid",
    "make_grid",
    "GroundState",
    "VariationalConstants",
    "compute_constants",
    "EvolveConfig",
    "simulate",
]

__version__ = "0.1.0"
