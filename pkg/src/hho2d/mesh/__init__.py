"""Polytopal meshes: data model, generators and I/O."""

from .core import (
    Mesh,
    MeshError,
    MeshQualityReport,
    SimplicialSubdivision,
    build_mesh,
    compute_geometry,
    quality_report,
)
from .families import FAMILIES, MAX_LEVEL, MeshFamilySpec, generate_mesh_family
from .io import dump_mesh, dump_mesh_file, load_mesh, load_mesh_file

__all__ = [
    "FAMILIES",
    "MAX_LEVEL",
    "Mesh",
    "MeshError",
    "MeshFamilySpec",
    "MeshQualityReport",
    "SimplicialSubdivision",
    "build_mesh",
    "compute_geometry",
    "dump_mesh",
    "dump_mesh_file",
    "generate_mesh_family",
    "load_mesh",
    "load_mesh_file",
    "quality_report",
]
