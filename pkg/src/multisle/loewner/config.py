"""Configuration records for Loewner-chain simulations."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["TraceConfig", "McConfig", "seed_sequence", "make_rng"]


@dataclass(frozen=True)
class TraceConfig:
    """Discretisation of a single Loewner chain.

    Time steps and stopping thresholds default to multiples of the initial
    minimum gap of the configuration, so that the discretisation is scale
    free.  Absolute values, when given, override the relative ones.

    Parameters
    ----------
    dt : float, optional
        Base time step in half-plane capacity units.
    epsilon_stop : float, optional
        Swallowing threshold on |V^k - W|.
    max_steps : int
        Steps after which a run is reported as unresolved.
    seed : int
        Seed for single-trace sampling.
    dt_factor : float
        Default ``dt = dt_factor * min_gap**2``.
    eps_factor : float
        Default ``epsilon_stop = eps_factor * min_gap``.
    adapt : float
        Steps are capped at ``adapt * d**2`` with ``d`` the current distance
        from W to the nearest tracked image.
    separation : float
        Scale separation required to accept a collapsed block as the
        terminal point (see :mod:`multisle.loewner.engine`).
    weight_tol : float
        A collapsed block counts as terminal only if the drift terms that
        pair the growing point with its outermost point carry at least
        ``1 - weight_tol`` of the total weight.
    scheme : {"slit", "euler"}
        Update of the images: exact vertical-slit flow for frozen driving
        (default) or the plain Euler step (see :mod:`multisle.loewner.chain`).
    """

    dt: float | None = None
    epsilon_stop: float | None = None
    max_steps: int = 1_000_000
    seed: int = 0
    dt_factor: float = 1e-4
    eps_factor: float = 1e-3
    adapt: float = 1e-3
    separation: float = 100.0
    weight_tol: float = 1e-3
    scheme: str = "slit"

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.epsilon_stop is not None and not self.epsilon_stop > 0:
            raise ValueError("epsilon_stop must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.scheme not in ("slit", "euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not (self.dt_factor > 0 and self.eps_factor > 0 and self.adapt > 0):
            raise ValueError("discretisation factors must be positive")

    def resolve(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-configuration (dt, epsilon_stop) for points of shape (n, 2N)."""
        x = np.atleast_2d(x)
        gap = np.min(np.diff(x, axis=1), axis=1)
        dt = np.full(x.shape[0], self.dt) if self.dt is not None else self.dt_factor * gap**2
        eps = (
            np.full(x.shape[0], self.epsilon_stop)
            if self.epsilon_stop is not None
            else self.eps_factor * gap
        )
        return dt, eps

    def with_(self, **kw) -> "TraceConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo sample budget.

    Parameters
    ----------
    n_samples : int
        Number of independent samples.
    seed : int
        Master seed; batch streams are spawned from it.
    target_rel_se : float
        Estimates whose relative standard error exceeds this are flagged.
    batch_size : int
        Samples per RNG stream.  Results depend on the seed and on this
        value, never on the number of worker processes.
    jobs : int
        Worker processes.
    """

    n_samples: int = 1000
    seed: int = 0
    target_rel_se: float = 0.05
    batch_size: int = 2000
    jobs: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.batch_size < 1 or self.jobs < 1:
            raise ValueError("batch_size and jobs must be positive")

    def batches(self) -> list[tuple[int, int]]:
        """(batch index, batch size) pairs covering ``n_samples``."""
        out = []
        done = 0
        k = 0
        while done < self.n_samples:
            m = min(self.batch_size, self.n_samples - done)
            out.append((k, m))
            done += m
            k += 1
        return out


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    """Child seed sequence addressed by an integer key path."""
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox counter-based generator for the stream ``(seed, *key)``.

    Normal variates come from numpy's ziggurat sampler
    (``Generator.standard_normal``), which is deterministic given the bit
    stream.
    """
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *key)))
