"""Finite element experiments for the Helmholtz equation at high frequency."""

from .coefficients import CoefficientField, ScatterConfig
from .constants import IngredientConstants, theorem1_constants, theorem2_constants
from .exact import exact_1d, mie_solution, plane_wave
from .fem import SingularSystemError, assemble_1d, assemble_2d, solve
from .mesh import mesh_annulus, mesh_interval, mesh_refine, validate_mesh
from .norms import ErrorReport, cosc_estimate, h1k_norm, rel_error

__version__ = "0.1.0"

__all__ = [
    "CoefficientField",
    "ScatterConfig",
    "IngredientConstants",
    "theorem1_constants",
    "theorem2_constants",
    "exact_1d",
    "mie_solution",
    "plane_wave",
    "SingularSystemError",
    "assemble_1d",
    "assemble_2d",
    "solve",
    "mesh_annulus",
    "mesh_interval",
    "mesh_refine",
    "validate_mesh",
    "ErrorReport",
    "cosc_estimate",
    "h1k_norm",
    "rel_error",
    "__version__",
]
