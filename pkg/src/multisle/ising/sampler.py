r"""Monte Carlo samplers for the Ising model with fixed boundary spins.

Both samplers update only the interior block ``1..L x 1..L`` of the spin
array; the collar is read but never written.

``heatbath``
    Sequential single-site heat bath: site ``i`` becomes +1 with probability
    ``1 / (1 + exp(-2 beta h_i))``, ``h_i`` the sum of its four neighbours.
    One sweep visits every interior site once in lexicographic order.
``wolff_frozen_boundary``
    Single-cluster Wolff moves.  A cluster is grown from a uniformly chosen
    interior site with bond probability ``1 - exp(-2 beta)``; if it reaches
    a boundary spin the move is rejected (the spins stay as they are),
    otherwise the whole cluster is flipped.  One sweep is a run of moves
    whose cluster sizes (rejected ones included) add up to at least L^2.

Random numbers inside the compiled kernels come from numba's Mersenne
Twister, seeded per call from a 63-bit integer drawn from the Philox stream
of the caller, so every sample is reproducible from the master seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ..loewner.config import make_rng
from .lattice import LatticePolygon

__all__ = [
    "BETA_C",
    "ALGORITHMS",
    "SpinField",
    "sample_spins",
    "random_interior",
    "run_sweeps",
    "heatbath_probabilities",
]

#: critical inverse temperature log(1 + sqrt 2) / 2
BETA_C = 0.5 * math.log(1.0 + math.sqrt(2.0))
ALGORITHMS = ("heatbath", "wolff_frozen_boundary")
#: stream key for single samples
_STREAM = 10


@dataclass
class SpinField:
    """Spins on a lattice polygon, collar included.

    Attributes
    ----------
    polygon : LatticePolygon
    spins : ndarray of int8, shape (L + 2, L + 2)
        Indexed ``[x, y]``; the collar holds the boundary spins.
    """

    polygon: LatticePolygon
    spins: np.ndarray

    @property
    def interior(self) -> np.ndarray:
        return self.spins[1:-1, 1:-1]

    def magnetization(self) -> float:
        """Mean interior spin."""
        return float(self.interior.mean())

    def copy(self) -> "SpinField":
        return SpinField(self.polygon, self.spins.copy())


def heatbath_probabilities(beta: float) -> np.ndarray:
    """P(spin = +1) for local fields h = -4, -2, 0, 2, 4."""
    h = np.array([-4.0, -2.0, 0.0, 2.0, 4.0])
    if math.isinf(beta):
        return np.array([0.0, 0.0, 0.5, 1.0, 1.0])
    return 1.0 / (1.0 + np.exp(-2.0 * beta * h))


@numba.njit(cache=True)
def _seed(seed):  # pragma: no cover - compiled
    np.random.seed(seed)


@numba.njit(cache=True)
def _heatbath(s, prob, sweeps):  # pragma: no cover - compiled
    n = s.shape[0]
    for _ in range(sweeps):
        for x in range(1, n - 1):
            for y in range(1, n - 1):
                h = s[x - 1, y] + s[x + 1, y] + s[x, y - 1] + s[x, y + 1]
                s[x, y] = 1 if np.random.random() < prob[(h + 4) // 2] else -1


@numba.njit(cache=True)
def _wolff(s, p_add, sweeps, queue, mark):  # pragma: no cover - compiled
    n = s.shape[0]
    L = n - 2
    target = L * L
    stamp = mark.max()
    accepted = 0
    for _ in range(sweeps):
        work = 0
        while work < target:
            stamp += 1
            x0 = 1 + np.random.randint(L)
            y0 = 1 + np.random.randint(L)
            sg = s[x0, y0]
            queue[0, 0] = x0
            queue[0, 1] = y0
            mark[x0, y0] = stamp
            size = 1
            head = 0
            hit = False
            while head < size and not hit:
                x = queue[head, 0]
                y = queue[head, 1]
                head += 1
                for k in range(4):
                    if k == 0:
                        u, v = x + 1, y
                    elif k == 1:
                        u, v = x - 1, y
                    elif k == 2:
                        u, v = x, y + 1
                    else:
                        u, v = x, y - 1
                    if s[u, v] != sg or mark[u, v] == stamp:
                        continue
                    if np.random.random() >= p_add:
                        continue
                    if u == 0 or v == 0 or u == n - 1 or v == n - 1:
                        hit = True
                        break
                    mark[u, v] = stamp
                    queue[size, 0] = u
                    queue[size, 1] = v
                    size += 1
            work += size
            if not hit:
                accepted += 1
                for i in range(size):
                    s[queue[i, 0], queue[i, 1]] = -sg
    return accepted


def random_interior(poly: LatticePolygon, rng: np.random.Generator) -> SpinField:
    """Uniformly random interior spins with the boundary of ``poly``."""
    s = poly.boundary_spins.copy()
    s[1:-1, 1:-1] = rng.choice(np.array([-1, 1], dtype=np.int8), size=(poly.L, poly.L))
    return SpinField(poly, s)


def run_sweeps(field: SpinField, beta: float, sweeps: int, algorithm: str,
               rng: np.random.Generator) -> int:
    """Advance ``field`` in place by ``sweeps`` sweeps.

    Returns the number of accepted cluster flips (Wolff) or 0 (heat bath).
    """
    if not beta >= 0:
        raise ValueError("beta must be non-negative")
    if sweeps < 0:
        raise ValueError("sweeps must be non-negative")
    if sweeps == 0:
        return 0
    _seed(int(rng.integers(0, 2**63 - 1)))
    if algorithm == "heatbath":
        _heatbath(field.spins, heatbath_probabilities(beta), int(sweeps))
        return 0
    if algorithm == "wolff_frozen_boundary":
        L = field.polygon.L
        p_add = 1.0 if math.isinf(beta) else -math.expm1(-2.0 * beta)
        queue = np.empty((L * L, 2), dtype=np.int64)
        mark = np.zeros(field.spins.shape, dtype=np.int64)
        return int(_wolff(field.spins, p_add, int(sweeps), queue, mark))
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def sample_spins(
    poly: LatticePolygon,
    beta: float = BETA_C,
    sweeps: int | None = None,
    algorithm: str = "heatbath",
    seed: int | np.random.Generator = 0,
) -> SpinField:
    """One spin configuration after ``sweeps`` sweeps from a random start.

    ``sweeps`` defaults to ``10 * L**2`` for the heat bath and ``10 * L`` for
    the Wolff sampler.

    Examples
    --------
    >>> from multisle.ising.lattice import build_polygon
    >>> f = sample_spins(build_polygon(8, (0.0, 0.5)), sweeps=10, seed=1)
    >>> f.spins.shape
    (10, 10)
    """
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(int(seed), _STREAM)
    if sweeps is None:
        sweeps = 10 * poly.L ** 2 if algorithm == "heatbath" else 10 * poly.L
    field = random_interior(poly, rng)
    run_sweeps(field, beta, sweeps, algorithm, rng)
    return field
