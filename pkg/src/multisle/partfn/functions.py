"""Scalar entry points operating on :class:`PointConfig` values."""
from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from ..combinat import LinkPattern, enumerate_link_patterns
from . import bounds as _b
from . import pfaffian as _pf
from .ode_n2 import log_pure_n2
from .types import ISING, PartitionValue, PointConfig, SleParams

if TYPE_CHECKING:  # pragma: no cover
    from ..loewner.config import McConfig, TraceConfig

__all__ = [
    "MethodError",
    "poisson_kernel",
    "b_alpha",
    "b_total",
    "z_ising_sum",
    "z_ising_pfaffian",
    "hafnian_sum",
    "grad_log_z_ising",
    "gff_prob",
    "z_pure",
    "z_symmetric",
    "N2_PATTERNS",
]

#: The two link patterns for N = 2, in enumeration order.
N2_PATTERNS = (LinkPattern([(1, 2), (3, 4)]), LinkPattern([(1, 4), (2, 3)]))


class MethodError(ValueError):
    """Requested evaluation method does not apply to the given input."""


def _pc(x) -> PointConfig:
    return x if isinstance(x, PointConfig) else PointConfig(x)


def poisson_kernel(x: float, y: float) -> PartitionValue:
    """Boundary Poisson kernel of the half-plane, |y - x|^{-2}.

    >>> poisson_kernel(0, 2).value
    0.25
    """
    if x == y:
        raise ValueError("Poisson kernel is singular at coinciding points")
    return PartitionValue(float(_b.log_poisson_kernel(x, y)))


def b_alpha(alpha: LinkPattern, x) -> PartitionValue:
    """prod over links {a,b} of |x_b - x_a|^{-1}."""
    x = _pc(x)
    if alpha.n_links != x.n:
        raise ValueError(f"pattern has {alpha.n_links} links but {x.n} point pairs given")
    return PartitionValue(float(_b.log_b_alpha(alpha.index_array(), x.array)))


def b_total(x) -> PartitionValue:
    """The alternating product prod_{i<j} (x_j - x_i)^{(-1)^{j-i}}."""
    return PartitionValue(float(_b.log_b_total(_pc(x).array)))


def z_ising_sum(x) -> PartitionValue:
    """Pfaffian of 1/(x_j - x_i) as an explicit signed sum over pairings."""
    v = float(_pf.ising_sum(_pc(x).array))
    if not v > 0:
        raise ArithmeticError(f"signed pairing sum is not positive ({v})")
    return PartitionValue(math.log(v))


def z_ising_pfaffian(x) -> PartitionValue:
    """Pfaffian of 1/(x_j - x_i) by skew elimination with pivoting."""
    return PartitionValue(float(_pf.log_ising_pfaffian(_pc(x).array)))


def hafnian_sum(x) -> PartitionValue:
    """Hafnian of (x_j - x_i)^{-2} as an explicit sum over pairings."""
    return PartitionValue(math.log(float(_pf.hafnian_sum_array(_pc(x).array))))


def grad_log_z_ising(j: int, x) -> float:
    """Partial derivative of log Z_Ising in x_j (1-based j)."""
    x = _pc(x)
    if not 1 <= j <= len(x):
        raise IndexError(f"j={j} out of range 1..{len(x)}")
    return float(_pf.grad_log_ising(x.array)[j - 1])


def gff_prob(a: int, b: int, x) -> float:
    """Probability that the level line from x_a ends at x_b.

    >>> round(gff_prob(1, 2, (0, 1, 2, 3)), 12)
    0.75
    """
    return math.exp(float(_b.log_gff_prob(a, b, _pc(x).array)))


def z_pure(
    alpha: LinkPattern,
    x,
    params: SleParams = ISING,
    method: str | None = None,
    mc: "McConfig | None" = None,
    cfg: "TraceConfig | None" = None,
) -> PartitionValue:
    """Pure partition function Z_alpha.

    Parameters
    ----------
    method : {"closed_form", "ode_n2", "cascade_mc"}, optional
        Defaults to ``closed_form`` for one link and ``ode_n2`` for two links
        at kappa = 3.  ``cascade_mc`` runs the Loewner-chain Monte Carlo and
        needs ``mc`` (and optionally ``cfg``).

    Returns
    -------
    PartitionValue
        Exact methods have ``stderr == 0``.
    """
    x = _pc(x)
    n = alpha.n_links
    if n != x.n:
        raise ValueError(f"pattern has {n} links but {x.n} point pairs given")
    if method is None:
        method = "closed_form" if n == 1 else "ode_n2"
    if method == "closed_form":
        if n != 1:
            raise MethodError("closed form available for a single link only")
        return PartitionValue(-2.0 * params.h * math.log(x[1] - x[0]))
    if method == "ode_n2":
        if n != 2 or not params.is_ising:
            raise MethodError("ode_n2 requires N = 2 and kappa = 3")
        k = N2_PATTERNS.index(alpha)
        return PartitionValue(float(log_pure_n2(k, x.array)))
    if method == "cascade_mc":
        if mc is None:
            raise MethodError("cascade_mc needs a McConfig")
        from ..loewner.cascade import cascade_z_pure

        return cascade_z_pure(alpha, x, params, cfg, mc)
    raise MethodError(f"unknown method {method!r}")


def z_symmetric(x, params: SleParams = ISING) -> PartitionValue:
    """Symmetric partition function: the Pfaffian at kappa = 3, else a sum of pure functions."""
    x = _pc(x)
    if params.is_ising:
        return z_ising_pfaffian(x)
    if x.n == 1:
        return z_pure(enumerate_link_patterns(1)[0], x, params)
    raise MethodError("symmetric partition function needs kappa = 3 or N = 1")
