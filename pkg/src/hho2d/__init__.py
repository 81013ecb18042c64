"""Hybrid high-order discretization of nonlinear diffusion on polytopal meshes."""

__version__ = "0.1.0"

from .assembly import Discretization, Problem
from .dofs import BoundaryCondition, DiscreteSolution, DofMap
from .flux import glacier, make_law, plaplace
from .mesh import MeshFamilySpec, generate_mesh_family, load_mesh
from .solver import SolveOptions, continuation_solve, newton_solve

__all__ = [
    "BoundaryCondition",
    "DiscreteSolution",
    "Discretization",
    "DofMap",
    "MeshFamilySpec",
    "Problem",
    "SolveOptions",
    "__version__",
    "continuation_solve",
    "generate_mesh_family",
    "glacier",
    "load_mesh",
    "make_law",
    "newton_solve",
    "plaplace",
]
