"""Square-lattice polygons with alternating boundary conditions.

Geometry
--------
An ``L x L`` block of interior vertices is surrounded by a one-cell collar of
fixed boundary spins, giving an ``n x n`` array with ``n = L + 2`` indexed
``[x, y]`` (x to the right, y upwards).  The collar ("ring") has
``P = 4 (L + 1)`` cells, numbered counterclockwise starting from the
bottom-left corner cell ``(0, 0)`` and running east along the bottom row.

Boundary position ``k`` is the primal edge between ring cells ``k - 1`` and
``k`` (cyclically).  Its dual edge joins an outer face to a plaquette of the
array; marked points live on these outer faces, so every marked point sits
on the dual boundary between two boundary arcs.  The boundary arc from mark
``2j - 1`` to mark ``2j`` (ring cells ``k_{2j-1}, ..., k_{2j} - 1``) carries
+1 spins, the arc from ``2j`` to ``2j + 1`` carries -1 spins.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

__all__ = ["LatticePolygon", "build_polygon", "ring_cells", "MarkCollision"]


class MarkCollision(ValueError):
    """Two marked fractions round to the same boundary position."""


@lru_cache(maxsize=64)
def ring_cells(L: int) -> np.ndarray:
    """(P, 2) array of the collar cells in counterclockwise order (read only)."""
    n = L + 2
    bottom = [(x, 0) for x in range(n)]
    right = [(n - 1, y) for y in range(1, n)]
    top = [(x, n - 1) for x in range(n - 2, -1, -1)]
    left = [(0, y) for y in range(n - 2, 0, -1)]
    out = np.array(bottom + right + top + left, dtype=np.int64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LatticePolygon:
    """A discrete polygon: interior size, marked boundary positions.

    Attributes
    ----------
    L : int
        Interior vertices per side.
    marks : tuple of int
        Boundary positions (see the module docstring) in counterclockwise
        order, 2N of them.
    """

    L: int
    marks: tuple[int, ...]

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be positive")
        m = self.marks
        if len(m) == 0 or len(m) % 2:
            raise ValueError("an even, positive number of marked points is required")
        P = self.perimeter
        if any(not 0 <= k < P for k in m):
            raise ValueError("marked position outside the boundary")
        if len(set(m)) != len(m):
            raise MarkCollision("marked points collide")
        if list(m) != sorted(m):
            raise ValueError("marked points must be listed counterclockwise from position 0")

    @property
    def n(self) -> int:
        """Side of the spin array including the collar."""
        return self.L + 2

    @property
    def width(self) -> int:
        return self.L

    @property
    def height(self) -> int:
        return self.L

    @property
    def perimeter(self) -> int:
        return 4 * (self.L + 1)

    @property
    def n_links(self) -> int:
        return len(self.marks) // 2

    @cached_property
    def ring(self) -> np.ndarray:
        return ring_cells(self.L)

    @cached_property
    def ring_spins(self) -> np.ndarray:
        """Spin of every ring cell, in ring order."""
        P = self.perimeter
        s = np.empty(P, dtype=np.int8)
        m = self.marks
        for i, k in enumerate(m):
            stop = m[(i + 1) % len(m)]
            idx = np.arange(k, stop if stop > k else stop + P) % P
            s[idx] = 1 if i % 2 == 0 else -1
        return s

    @cached_property
    def boundary_spins(self) -> np.ndarray:
        """``n x n`` int8 array: collar spins, zeros inside."""
        a = np.zeros((self.n, self.n), dtype=np.int8)
        a[self.ring[:, 0], self.ring[:, 1]] = self.ring_spins
        return a

    def mark_edge(self, i: int) -> tuple[tuple[int, int], tuple[int, int]]:
        """Inner plaquette and inward unit step of marked point i (0-based).

        Plaquette ``(p, q)`` is the dual vertex surrounded by the cells
        ``(p, q), (p+1, q), (p, q+1), (p+1, q+1)``.
        """
        return boundary_edge(self.L, self.marks[i])

    def position_xy(self, k: float) -> tuple[float, float]:
        """Continuum location of boundary position k on the square
        ``[0.5, L + 0.5]^2`` (cell coordinates) bounded by the dual boundary."""
        (p, q), _ = boundary_edge(self.L, int(k))
        # the first dual vertex inside lies on the line separating the collar
        # from the interior vertices
        return p + 0.5, q + 0.5


def boundary_edge(L: int, k: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Inner plaquette and inward direction for boundary position k."""
    ring = ring_cells(L)
    P = ring.shape[0]
    c1 = ring[(k - 1) % P]
    c2 = ring[k % P]
    n = L + 2
    if c1[1] == c2[1]:  # horizontal neighbours, vertical primal edge
        p = int(min(c1[0], c2[0]))
        return ((p, 0), (0, 1)) if c1[1] == 0 else ((p, n - 2), (0, -1))
    q = int(min(c1[1], c2[1]))
    return ((0, q), (1, 0)) if c1[0] == 0 else ((n - 2, q), (-1, 0))


def build_polygon(L: int, marked_fractions) -> LatticePolygon:
    """Square polygon with marks at the nearest boundary positions.

    Parameters
    ----------
    L : int
        Interior vertices per side.
    marked_fractions : sequence of float
        2N strictly increasing fractions in [0, 1) of the perimeter of the
        square ``[0.5, L + 0.5]^2`` (see :meth:`LatticePolygon.position_xy`),
        measured counterclockwise from the bottom-left corner.  Fraction f
        lies on side ``floor(4 f)`` at offset ``4 f L mod L``; the offset is
        rounded to the nearest lattice position, so fractions that are
        multiples of ``1 / (4 L)`` are placed exactly.

    Examples
    --------
    >>> build_polygon(8, (0.0, 0.5)).marks
    (1, 19)
    >>> build_polygon(100, (0, 0.25, 0.5, 0.75)).marks
    (1, 102, 203, 304)
    """
    f = np.asarray(marked_fractions, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise ValueError("at least one pair of marked points is required")
    if f.size % 2:
        raise ValueError("the number of marked points must be even")
    if np.any(f < 0) or np.any(f >= 1) or np.any(np.diff(f) <= 0):
        raise ValueError("fractions must be strictly increasing in [0, 1)")
    s = np.rint(f * 4 * L).astype(np.int64)
    side, off = np.divmod(s, L)
    # offsets run 0..L-1 on each side; s = 4L wraps to the first corner
    side %= 4
    k = side * (L + 1) + off + 1
    if len(set(k.tolist())) != k.size:
        raise MarkCollision(f"marked fractions {tuple(f)} collide at L={L}")
    if np.any(np.diff(k) <= 0):
        raise MarkCollision(f"the last marked fraction rounds past the starting corner at L={L}")
    return LatticePolygon(L, tuple(int(v) for v in k))
