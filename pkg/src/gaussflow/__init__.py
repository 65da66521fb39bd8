"""Convex bodies under Gauss curvature flows, in support-function form.

Subpackages/modules:

- sphere_grid: spectral quadrature and differentiation on S^1/S^2
- body: support functions, curvature, volumes, radii, duals
- entropy: power-mean entropy functionals, entropy/Santalo points
- flow: contracting/normalized/expanding flows, soliton detection
- inequalities: identity and inequality verifiers
- cli: command-line front end (make-body / flow / verify / sweep)
"""

__version__ = "0.1.0"
