"""Partition functions of multiple SLE(3) and the associated bound functions."""
from .types import ISING, PartitionValue, PointConfig, SleParams
from .functions import (
    N2_PATTERNS,
    MethodError,
    b_alpha,
    b_total,
    gff_prob,
    grad_log_z_ising,
    hafnian_sum,
    poisson_kernel,
    z_ising_pfaffian,
    z_ising_sum,
    z_pure,
    z_symmetric,
)
from .checks import check_bounds, check_cascade_asymptotics
from .pfaffian import PfaffianBreakdown

__all__ = [
    "ISING",
    "PartitionValue",
    "PointConfig",
    "SleParams",
    "N2_PATTERNS",
    "MethodError",
    "PfaffianBreakdown",
    "b_alpha",
    "b_total",
    "gff_prob",
    "grad_log_z_ising",
    "hafnian_sum",
    "poisson_kernel",
    "z_ising_pfaffian",
    "z_ising_sum",
    "z_pure",
    "z_symmetric",
    "check_bounds",
    "check_cascade_asymptotics",
]
