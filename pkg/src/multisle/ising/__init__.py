"""Critical Ising model on square polygons with alternating boundary conditions."""
from .continuum import continuum_ratio, mark_images, square_to_halfplane
from .crossing import (
    CrossingHistogram,
    SamplerSettings,
    estimate_crossing_probs,
    integrated_autocorrelation,
    ratio_deviation,
)
from .export import interfaces_to_svg, spins_to_pgm
from .interface import InterfaceTrace, TopologyError, connectivity, trace_from, trace_interfaces
from .lattice import LatticePolygon, MarkCollision, build_polygon
from .sampler import ALGORITHMS, BETA_C, SpinField, run_sweeps, sample_spins

__all__ = [
    "ALGORITHMS",
    "BETA_C",
    "CrossingHistogram",
    "InterfaceTrace",
    "LatticePolygon",
    "MarkCollision",
    "SamplerSettings",
    "SpinField",
    "TopologyError",
    "build_polygon",
    "connectivity",
    "continuum_ratio",
    "estimate_crossing_probs",
    "integrated_autocorrelation",
    "interfaces_to_svg",
    "mark_images",
    "ratio_deviation",
    "run_sweeps",
    "sample_spins",
    "spins_to_pgm",
    "square_to_halfplane",
    "trace_from",
    "trace_interfaces",
]
