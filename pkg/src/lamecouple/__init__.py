"""FEM-BEM coupling for (nonlinear) elasticity transmission problems in the plane."""
__version__ = "0.1.0"
