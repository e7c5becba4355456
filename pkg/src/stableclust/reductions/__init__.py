"""Hardness constructions: grid tiling and partial vertex cover on the moment curve."""

from .certificate import ReductionCertificate
from .grid import (
    GridReductionSpec,
    GridTilingInstance,
    build_cylinder_instance,
    build_grid_instance,
    certify_grid_equivalence,
    compute_nu,
    grid_centre_labels,
    is_valid_selection,
    solve_grid_tiling,
)
from .measure import MeasureReport, lattice_disc, measure_approx_check
from .pvc import (
    PvcGraph,
    PvcReduction,
    build_pvc4_instance,
    build_pvc6_instance,
    build_pvc_instance,
    certify_pvc_equivalence,
    coverage,
    pvc_cost_formula,
    separation_gaps,
    solve_pvc,
)
from .spheres import (
    ClearanceReport,
    SphereFit,
    clearance_grid,
    closed_form_3d,
    closed_form_4d,
    curve_gap,
    fit_sphere_3d,
    fit_sphere_4d,
    moment_point,
    quarter_gaps,
    residuals,
    solve_sphere,
    sphere_curve_clearance,
)

__all__ = [n for n in dir() if not n.startswith("_")]
