"""Numerical companion to a causally discontinuous Morse spacetime in R^4."""

from .barrier import (
    P_POINT,
    Q_POINT,
    BarrierCertificate,
    PlaneCurve,
    assemble_barrier,
    assemble_drift_barrier,
    discriminant,
    drift_solution,
    hyperbola_coeffs,
    interpolation_curve,
    quad_coeffs,
    v_range,
    verify_curve,
    verify_hyperbola,
    x_plus_minus,
)
from .chart import CausalClass, Classification, MorseChart, classify4, eigenlines2d, metric_g
from .errors import MorseCausalError
from .geodesics import FlowParams, g_length, gradient_flow, xf_field
from .projection import BarrierSign, barrier_sign, classify_plane
from .reach import Curve4, Orientation, ReachGrid, crossing_check, hyperbolic_escape, reach_grid, spiral_connect
from .regions import RegionLabel, beta_roots, boundary_residual, classify_region, trace_boundary

__version__ = "0.1.0"

__all__ = [
    "assemble_barrier",
    "assemble_drift_barrier",
    "barrier_sign",
    "BarrierCertificate",
    "BarrierSign",
    "beta_roots",
    "boundary_residual",
    "CausalClass",
    "Classification",
    "classify4",
    "classify_plane",
    "classify_region",
    "crossing_check",
    "Curve4",
    "discriminant",
    "drift_solution",
    "eigenlines2d",
    "FlowParams",
    "g_length",
    "gradient_flow",
    "hyperbola_coeffs",
    "hyperbolic_escape",
    "interpolation_curve",
    "metric_g",
    "MorseCausalError",
    "MorseChart",
    "Orientation",
    "P_POINT",
    "PlaneCurve",
    "Q_POINT",
    "quad_coeffs",
    "reach_grid",
    "ReachGrid",
    "RegionLabel",
    "spiral_connect",
    "trace_boundary",
    "v_range",
    "verify_curve",
    "verify_hyperbola",
    "x_plus_minus",
    "xf_field",
]
