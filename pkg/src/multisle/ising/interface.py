"""Interfaces between +1 and -1 spins on the dual lattice.

A walker moves between dual vertices (plaquettes, see
:mod:`multisle.ising.lattice`) across primal edges whose two spins differ.
Started from an even marked point it keeps the +1 spins on its left; started
from an odd one it keeps them on its right.  When several continuations are
admissible (a plaquette with a checkerboard of spins) it turns left in its
own frame of motion; the mirrored walker from odd starts turns right, so
that tracing an interface from either end gives the same path.  The
``tie_break="right"`` option swaps both preferences.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from ..combinat import LinkPattern
from .lattice import LatticePolygon, boundary_edge
from .sampler import SpinField

__all__ = ["InterfaceTrace", "TopologyError", "trace_interfaces", "trace_from", "connectivity"]

# directions counterclockwise: E, N, W, S
_DX = np.array([1, 0, -1, 0], dtype=np.int64)
_DY = np.array([0, 1, 0, -1], dtype=np.int64)
# (left cell, right cell) offsets from the plaquette corner for a move in direction d
_LEFT = np.array([[1, 1], [0, 1], [0, 0], [1, 0]], dtype=np.int64)
_RIGHT = np.array([[1, 0], [1, 1], [0, 1], [0, 0]], dtype=np.int64)


class TopologyError(RuntimeError):
    """An interface left the domain or missed the marked points."""


@dataclass(frozen=True)
class InterfaceTrace:
    """A traced interface.

    Attributes
    ----------
    path : ndarray of int, shape (K, 2)
        Plaquettes visited, from the first one inside to the last one.
    start, end : int
        Marked indices (1-based) of the two ends.
    """

    path: np.ndarray
    start: int
    end: int

    def xy(self) -> np.ndarray:
        """Plaquette centres in cell coordinates."""
        return self.path.astype(float) + 0.5

    @property
    def link(self) -> tuple[int, int]:
        return (min(self.start, self.end), max(self.start, self.end))


def _dir_index(dx: int, dy: int) -> int:
    return {(1, 0): 0, (0, 1): 1, (-1, 0): 2, (0, -1): 3}[(dx, dy)]


@lru_cache(maxsize=64)
def _exit_table(poly: LatticePolygon) -> np.ndarray:
    """exit[p, q, d] = boundary position left through, or -1."""
    m = poly.n - 1
    tab = np.full((m, m, 4), -1, dtype=np.int64)
    for k in range(poly.perimeter):
        (p, q), (dx, dy) = boundary_edge(poly.L, k)
        tab[p, q, _dir_index(-dx, -dy)] = k
    return tab


@numba.njit(cache=True)
def _walk(s, p, q, d, plus_left, turn_left, exit_tab, out, DX, DY, LEFT, RIGHT):  # pragma: no cover
    m = s.shape[0] - 1
    out[0, 0] = p
    out[0, 1] = q
    k = 1
    sg = 1 if plus_left else -1
    for _ in range(out.shape[0] - 1):
        chosen = -1
        for t in range(3):
            # preference: left, straight, right (or the reverse)
            turn = 1 - t if turn_left else t - 1
            e = (d + turn) % 4
            lx = s[p + LEFT[e, 0], q + LEFT[e, 1]]
            rx = s[p + RIGHT[e, 0], q + RIGHT[e, 1]]
            if lx == sg and rx == -sg:
                chosen = e
                break
        if chosen < 0:
            return -2, k
        d = chosen
        pos = exit_tab[p, q, d]
        if pos >= 0:
            return pos, k
        p += DX[d]
        q += DY[d]
        if p < 0 or q < 0 or p >= m or q >= m:
            return -3, k
        out[k, 0] = p
        out[k, 1] = q
        k += 1
    return -4, k


def trace_from(field: SpinField, i: int, tie_break: str = "left",
               _tables=None) -> InterfaceTrace:
    """Trace the interface starting at marked point i (1-based)."""
    poly = field.polygon
    if tie_break not in ("left", "right"):
        raise ValueError("tie_break must be 'left' or 'right'")
    exit_tab = _exit_table(poly) if _tables is None else _tables
    (p, q), (dx, dy) = poly.mark_edge(i - 1)
    d = _dir_index(dx, dy)
    even = i % 2 == 0
    turn_left = even == (tie_break == "left")
    out = np.empty((2 * poly.n * poly.n + 2, 2), dtype=np.int64)
    pos, k = _walk(field.spins, p, q, d, even, turn_left, exit_tab, out, _DX, _DY, _LEFT, _RIGHT)
    if pos < 0:
        raise TopologyError(f"interface from marked point {i} failed (code {pos})")
    try:
        end = poly.marks.index(int(pos)) + 1
    except ValueError:
        raise TopologyError(f"interface from {i} ended at unmarked boundary position {pos}") from None
    return InterfaceTrace(out[:k].copy(), i, end)


def trace_interfaces(field: SpinField, tie_break: str = "left") -> list[InterfaceTrace]:
    """The N interfaces started from the even marked points.

    Raises
    ------
    TopologyError
        If an interface does not end at an odd marked point or two
        interfaces share an end point.

    Examples
    --------
    >>> from multisle.ising.lattice import build_polygon
    >>> from multisle.ising.sampler import sample_spins
    >>> f = sample_spins(build_polygon(8, (0.0, 0.5)), sweeps=5, seed=3)
    >>> [(t.start, t.end) for t in trace_interfaces(f)]
    [(2, 1)]
    """
    poly = field.polygon
    tab = _exit_table(poly)
    traces = [trace_from(field, i, tie_break, tab) for i in range(2, len(poly.marks) + 1, 2)]
    ends = [t.end for t in traces]
    if any(e % 2 == 0 for e in ends):
        raise TopologyError(f"interfaces from even points ended at {ends}")
    if len(set(ends)) != len(ends):
        raise TopologyError(f"interfaces share end points {ends}")
    return traces


def connectivity(traces: list[InterfaceTrace]) -> LinkPattern:
    """Link pattern formed by the interfaces.

    Examples
    --------
    >>> t = [InterfaceTrace(np.zeros((1, 2), int), 2, 3), InterfaceTrace(np.zeros((1, 2), int), 4, 1)]
    >>> str(connectivity(t))
    '1-4,2-3'
    """
    links = [t.link for t in traces]
    try:
        return LinkPattern(links)
    except ValueError as exc:
        raise TopologyError(f"interfaces do not form a planar pairing: {links}") from exc
