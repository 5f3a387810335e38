r"""Continuum values for crossing probabilities on a square.

The Schwarz-Christoffel map ``w = F(arcsin z, k)`` takes the upper half-plane
onto the rectangle ``[-K, K] x [0, K']`` with corners at ``+-1, +-1/k``;
choosing the modulus with ``K' = 2K`` makes the rectangle a square.  Its
inverse is the Jacobi function ``z = sn(w, k)``, evaluated for complex
arguments through the addition formula

.. math::

    \operatorname{sn}(u + iv, k) =
        \frac{s\, d_1 + i\, c\, d\, s_1 c_1}{c_1^2 + k^2 s^2 s_1^2},

with ``s, c, d`` the Jacobi functions of u at modulus k and
``s_1, c_1, d_1`` those of v at the complementary modulus.  The images of
boundary points are real; a final Mobius map sends a boundary point between
the last and the first mark to infinity so that the images increase in the
counterclockwise order of the marks.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import ellipj, ellipk

from ..combinat import LinkPattern
from ..partfn.functions import N2_PATTERNS
from ..partfn.ode_n2 import log_pure_n2
from .lattice import LatticePolygon

__all__ = ["square_modulus", "sn_complex", "square_to_halfplane", "mark_images", "continuum_ratio"]


@lru_cache(maxsize=None)
def square_modulus() -> float:
    """Parameter m = k^2 with K(1 - m) = 2 K(m)."""
    return brentq(lambda m: ellipk(1.0 - m) - 2.0 * ellipk(m), 1e-6, 0.5, xtol=1e-15, rtol=1e-15)


def sn_complex(w, m: float) -> np.ndarray:
    """Jacobi sn(w | m) for complex w."""
    w = np.asarray(w, dtype=complex)
    s, c, d, _ = ellipj(w.real, m)
    s1, c1, d1, _ = ellipj(w.imag, 1.0 - m)
    den = c1 * c1 + m * s * s * s1 * s1
    return (s * d1 + 1j * c * d * s1 * c1) / den


def _perimeter_point(t: np.ndarray) -> np.ndarray:
    """Point of the unit square boundary at counterclockwise arclength t from (0, 0)."""
    t = np.mod(np.asarray(t, dtype=float), 4.0)
    side = np.floor(t).astype(int)
    f = t - side
    x = np.select([side == 0, side == 1, side == 2], [f, 1.0, 1.0 - f], 0.0)
    y = np.select([side == 0, side == 1, side == 2], [0.0, f, 1.0], 1.0 - f)
    return x + 1j * y


def _projective_image(zeta) -> tuple[np.ndarray, np.ndarray]:
    """Image of unit-square points as a pair (a, b) with z = a / b.

    Points in the upper half of the square use ``sn(w) = 1 / (k sn(w - iK'))``
    so that the pole at the top midpoint is represented exactly.
    """
    m = square_modulus()
    K = ellipk(m)
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    w = 2.0 * K * (zeta - 0.5)
    upper = zeta.imag > 0.5
    a = np.where(upper, 1.0 + 0j, 0j)
    b = np.where(upper, 0j, 1.0 + 0j)
    if (~upper).any():
        a[~upper] = sn_complex(w[~upper], m)
    if upper.any():
        b[upper] = math.sqrt(m) * sn_complex(w[upper] - 2j * K, m)
    return a, b


def square_to_halfplane(zeta) -> np.ndarray:
    """Image in the closed half-plane of points of the unit square [0, 1]^2.

    Examples
    --------
    >>> np.round(square_to_halfplane([0.5, 0.0, 1.0]).real, 12)
    array([ 0., -1.,  1.])
    """
    a, b = _projective_image(zeta)
    with np.errstate(divide="ignore", invalid="ignore"):
        return a / b


def _arclength(xy: np.ndarray) -> np.ndarray:
    """Counterclockwise arclength on the unit square boundary of boundary points."""
    x, y = xy.real, xy.imag
    tol = 1e-12
    return np.select(
        [np.abs(y) < tol, np.abs(x - 1) < tol, np.abs(y - 1) < tol],
        [x, 1.0 + y, 3.0 - x],
        4.0 - y,
    ) % 4.0


def mark_images(poly: LatticePolygon) -> np.ndarray:
    """Increasing real images of the marked points under the square-to-half-plane map."""
    L = poly.L
    xy = np.array([complex(*poly.position_xy(k)) for k in poly.marks])
    unit = (xy - (0.5 + 0.5j)) / L
    t = _arclength(unit)
    # a boundary point half way from the last mark to the first one
    gap = (t[0] - t[-1]) % 4.0
    t_inf = (t[-1] + 0.5 * (gap if gap > 0 else 4.0)) % 4.0
    a, b = (v.real for v in _projective_image(unit))
    pa, pb = (float(v.real[0]) for v in _projective_image(_perimeter_point(t_inf)))
    if abs(pb) <= 1e-14 * abs(pa):  # the chosen point is the pole itself
        out = a / b
    else:
        # z -> -1 / (z - p) in homogeneous coordinates
        out = -(b * pb) / (a * pb - pa * b)
    if np.any(np.diff(out) <= 0):  # pragma: no cover - geometric guarantee
        raise ArithmeticError("conformal images are not increasing")
    return out


def continuum_ratio(poly: LatticePolygon, alpha: LinkPattern) -> float:
    """Z_alpha / Z_Ising at the images of the marks (N <= 2).

    Examples
    --------
    >>> from multisle.ising.lattice import build_polygon
    >>> poly = build_polygon(64, (0.0, 0.25, 0.5, 0.75))
    >>> round(continuum_ratio(poly, LinkPattern.parse("1-2,3-4")), 10)
    0.5
    """
    N = poly.n_links
    if alpha.n_links != N:
        raise ValueError("pattern and polygon sizes differ")
    if N == 1:
        return 1.0
    if N != 2:
        raise NotImplementedError("continuum ratios are available for N <= 2")
    x = mark_images(poly)
    lz = [float(log_pure_n2(k, x)) for k in range(2)]
    k = N2_PATTERNS.index(alpha)
    return math.exp(lz[k] - np.logaddexp(lz[0], lz[1]))
