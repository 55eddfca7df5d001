"""Boundary element layer operators for planar isotropic elasticity."""
from .kernels import HypersingularKernel, KelvinKernel, LogKernel, TractionKernel, kelvin_tensor, lame_constants
from .operators import (
    BoundarySpace,
    LayerMatrices,
    assemble_K_and_M,
    assemble_layer_matrices,
    assemble_V,
    assemble_W,
    assemble_W_calderon,
    galerkin_matrix,
    mass_matrix,
)
from .quadrature import brute_force_pair, panel_integrals, singular_edge_quadrature

__all__ = [
    "BoundarySpace", "LayerMatrices", "KelvinKernel", "LogKernel", "TractionKernel",
    "kelvin_tensor", "lame_constants", "assemble_V", "assemble_K_and_M", "assemble_W", "assemble_W_calderon", "HypersingularKernel",
    "assemble_layer_matrices", "galerkin_matrix", "mass_matrix", "panel_integrals",
    "singular_edge_quadrature", "brute_force_pair",
]
