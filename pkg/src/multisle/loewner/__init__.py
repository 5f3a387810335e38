"""Loewner chains driven by multiple SLE(3) partition functions."""
from .cascade import MAX_CASCADE_LINKS, cascade_samples, cascade_z_pure
from .chain import ChainState, Drift, StepRejected, advance_chain, drift_field, make_drift
from .config import McConfig, TraceConfig, make_rng
from .engine import BatchResult, classify_terminal, run_batch
from .martingale import MartingaleResult, martingale_check, martingale_ratio
from .terminal import (
    TerminalReport,
    drift_for,
    exact_terminal_law,
    opposite_parity,
    run_to_swallow,
    terminal_probabilities,
)
from .trace import DrivingPath, SleTrace, forward_map, sample_sle_trace, zipper_trace

__all__ = [
    "BatchResult",
    "ChainState",
    "Drift",
    "DrivingPath",
    "MAX_CASCADE_LINKS",
    "MartingaleResult",
    "McConfig",
    "SleTrace",
    "StepRejected",
    "TerminalReport",
    "TraceConfig",
    "advance_chain",
    "cascade_samples",
    "cascade_z_pure",
    "classify_terminal",
    "drift_field",
    "drift_for",
    "exact_terminal_law",
    "forward_map",
    "make_drift",
    "make_rng",
    "martingale_check",
    "martingale_ratio",
    "opposite_parity",
    "run_batch",
    "run_to_swallow",
    "sample_sle_trace",
    "terminal_probabilities",
    "zipper_trace",
]
