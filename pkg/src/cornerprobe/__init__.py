"""Corner probing for piecewise-constant Helmholtz sources from Cauchy data on a sphere."""

from .dtn import SphereGrid, analyze, dtn_apply, dtn_eigenvalues, synthesize
from .forward import (BoundaryField, add_noise, ball_field, h1_norm, load_field, save_field,
                      simulate_boundary, volume_potential)
from .geometry import (Cell, ConvexPolyhedron, GeometryError, ProbeFrame, Scene, icosphere,
                       order_cells, validate_assumptions, vertex_cone)
from .kernels import d3_g, fundamental, phi
from .probe import boundary_functional, c0_lower_bound, cone_moment, theta_antiderivative
from .quadrature import QuadratureBudgetError, QuadratureSpec
from .recon import (VERSION, ProbeSchedule, ReconstructionError, ReconstructionReport, plan_reconstruction,
                    reconstruct, reconstruct_scene, stability_sweep)
from .scenefile import load_scene, save_scene

__version__ = VERSION

__all__ = [
    "BoundaryField", "Cell", "ConvexPolyhedron", "GeometryError", "ProbeFrame", "ProbeSchedule",
    "QuadratureBudgetError", "QuadratureSpec", "ReconstructionError", "ReconstructionReport", "Scene",
    "SphereGrid", "add_noise", "analyze", "ball_field", "boundary_functional", "c0_lower_bound",
    "cone_moment", "d3_g", "dtn_apply", "dtn_eigenvalues", "fundamental", "h1_norm", "icosphere",
    "load_field", "load_scene", "order_cells", "phi", "plan_reconstruction", "reconstruct",
    "reconstruct_scene", "save_field", "save_scene", "simulate_boundary", "stability_sweep",
    "synthesize", "theta_antiderivative", "validate_assumptions", "vertex_cone", "volume_potential",
    "__version__",
]
