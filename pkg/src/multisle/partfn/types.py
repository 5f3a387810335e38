"""Value types shared by the partition-function and simulation modules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

__all__ = ["PointConfig", "PartitionValue", "SleParams", "ISING", "as_points"]


@dataclass(frozen=True)
class PointConfig:
    """Strictly increasing boundary points x_1 < ... < x_{2N} on the real line.

    Construction rejects unsorted, repeated, non-finite or odd-length input
    instead of repairing it.

    Examples
    --------
    >>> PointConfig((0, 1, 2, 3)).n
    2
    >>> PointConfig((0, 2, 3, 6)).min_gap
    1.0
    """

    points: tuple[float, ...]

    def __init__(self, points: Iterable[float]):
        pts = tuple(float(p) for p in points)
        if len(pts) < 2 or len(pts) % 2:
            raise ValueError(f"need an even number >= 2 of points, got {len(pts)}")
        if not all(math.isfinite(p) for p in pts):
            raise ValueError("points must be finite")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError(f"points must be strictly increasing: {pts}")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        """Number N of pairs."""
        return len(self.points) // 2

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)

    @property
    def min_gap(self) -> float:
        return float(np.min(np.diff(self.points)))

    @property
    def spread(self) -> float:
        return self.points[-1] - self.points[0]

    def scaled(self, lam: float) -> "PointConfig":
        return PointConfig(lam * p for p in self.points)

    def shifted(self, c: float) -> "PointConfig":
        return PointConfig(p + c for p in self.points)


def as_points(x) -> np.ndarray:
    """Coerce a PointConfig or array-like to a float array (last axis = points)."""
    if isinstance(x, PointConfig):
        return x.array
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class PartitionValue:
    """A positive quantity carried in log space.

    Parameters
    ----------
    log_value : float
        Natural logarithm of the value; this is the authoritative field.
    stderr : float
        Standard error of ``value`` for Monte Carlo estimates, 0 if exact.
    n_samples : int
        Number of Monte Carlo samples, 0 if exact.
    converged : bool
        False when a Monte Carlo estimate misses its relative-error target.
    details : mapping
        Method-specific extras (for instance the two-level refinement).
    """

    log_value: float
    stderr: float = 0.0
    n_samples: int = 0
    converged: bool = True
    details: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def from_value(cls, value: float, **kw) -> "PartitionValue":
        if not value > 0:
            raise ValueError(f"partition values are positive, got {value}")
        return cls(math.log(value), **kw)

    @property
    def value(self) -> float:
        try:
            return math.exp(self.log_value)
        except OverflowError:
            return math.inf

    @property
    def exact(self) -> bool:
        return self.n_samples == 0

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class SleParams:
    """SLE parameter kappa together with the boundary exponent h = (6 - kappa) / (2 kappa)."""

    kappa: float = 3.0

    def __post_init__(self):
        if not 0 < self.kappa <= 6:
            raise ValueError(f"kappa must lie in (0, 6], got {self.kappa}")

    @property
    def h(self) -> float:
        return (6.0 - self.kappa) / (2.0 * self.kappa)

    @property
    def is_ising(self) -> bool:
        return self.kappa == 3.0


ISING = SleParams(3.0)
