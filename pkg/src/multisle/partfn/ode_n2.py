r"""Pure partition functions for two links at kappa = 3.

With four points the Moebius covariance reduces every pure partition
function to a function of the cross-ratio

.. math::

    z = \frac{(x_2 - x_1)(x_4 - x_3)}{(x_3 - x_1)(x_4 - x_2)} \in (0, 1),
    \qquad
    1 - z = \frac{(x_3 - x_2)(x_4 - x_1)}{(x_3 - x_1)(x_4 - x_2)},

through the ansatz Z = (x_2 - x_1)^{-1} (x_4 - x_3)^{-1} G(z).  Substituting
into the second-order PDE system (any of its four equations gives the same
result) yields

.. math::

    3 z (z-1)^2 G'' + 2 (z^2 - 1) G' - 2 z G = 0 .

Its local exponents are {0, 5/3} at z = 0, {2/3, -1} at z = 1 and
{-1, 2/3} at infinity.  The pattern {{1,2},{3,4}} corresponds to the
solution G_1 with G_1(0) = 1 (the pair {1,2} collapses onto the single-link
function) and without the (1 - z)^{-1} branch at z = 1 (the pair {2,3} is not
a link).  The other pattern follows from the cyclic relabelling
Z_{{1,4},{2,3}}(x) = (x_3 - x_2)^{-1} (x_4 - x_1)^{-1} G_1(1 - z).

The connection problem is solved numerically: Frobenius series near each
endpoint, adaptive Runge-Kutta integration towards z = 1/2, and a 2x2
matching of value and slope there.  The sum of the two pure functions is the
polynomial solution G_tot = (1 - z + z^2) / (1 - z), which the tests use as
an independent check.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "ODE_COEFFS_Z",
    "frobenius_coefficients",
    "N2Solution",
    "n2_solution",
    "cross_ratio",
    "log_pure_n2",
    "grad_log_pure_n2",
    "log_pure_n2_diffs",
    "grad_log_pure_n2_diffs",
    "g_total",
]

#: Coefficients (c_0, c_1, c_2) of G, G', G'' as polynomials in z
#: (lowest degree first) for the reduced equation.
ODE_COEFFS_Z = (
    np.array([0.0, -2.0]),
    np.array([-2.0, 0.0, 2.0]),
    np.array([0.0, 3.0, -6.0, 3.0]),
)


def _ff(s: float, m: int) -> float:
    out = 1.0
    for i in range(m):
        out *= s - i
    return out


def frobenius_coefficients(coeffs, r: float, n_terms: int) -> np.ndarray:
    """Frobenius coefficients a_n of G = u^r sum a_n u^n, a_0 = 1.

    Parameters
    ----------
    coeffs : sequence of polynomial coefficient arrays
        ``coeffs[m][j]`` multiplies ``u**j * G^{(m)}``.  The equation must be
        normalised so that the lowest shift ``j - m`` over all terms is 0.
    r : float
        A root of the indicial polynomial.
    """
    terms = [(m, j, c) for m, poly in enumerate(coeffs) for j, c in enumerate(poly) if c != 0]
    if min(j - m for m, j, _ in terms) != 0:
        raise ValueError("equation not normalised to minimal shift 0")

    def indicial(s):
        return sum(c * _ff(s, m) for m, j, c in terms if j == m)

    if abs(indicial(r)) > 1e-12:
        raise ValueError(f"{r} is not an indicial root")
    a = np.zeros(n_terms)
    a[0] = 1.0
    for n in range(1, n_terms):
        acc = 0.0
        for m, j, c in terms:
            d = j - m
            if d > 0 and n - d >= 0:
                acc += c * a[n - d] * _ff(n - d + r, m)
        f = indicial(n + r)
        if f == 0.0:
            raise ValueError("resonant exponent; log terms would be needed")
        a[n] = -acc / f
    return a


def _series(a: np.ndarray, r: float, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Value and u-derivative of u^r sum a_n u^n (Horner)."""
    u = np.asarray(u, dtype=float)
    s = np.zeros_like(u)
    ds = np.zeros_like(u)
    n = len(a)
    for k in range(n - 1, -1, -1):
        s = s * u + a[k]
        ds = ds * u + a[k] * (k + r)
    with np.errstate(divide="ignore", invalid="ignore"):
        ur = np.where(u > 0, u ** r, 0.0)
        dv = np.where(u > 0, u ** (r - 1.0), 0.0) * ds
    return ur * s, dv


def _rhs(z, y):
    g, dg = y
    p2 = 3.0 * z * (z - 1.0) ** 2
    p1 = 2.0 * (z * z - 1.0)
    p0 = -2.0 * z
    return [dg, -(p1 * dg + p0 * g) / p2]


@dataclass(frozen=True)
class N2Solution:
    """Numerical solution G_1 on (0, 1) with dense evaluation.

    Attributes
    ----------
    c1 : float
        Weight of the z^{5/3} branch in G_1 near z = 0.
    amp : float
        Amplitude of the (1 - z)^{2/3} branch in G_1 near z = 1.
    delta : float
        Width of the endpoint intervals on which series are used.
    """

    a0: np.ndarray
    a1: np.ndarray
    b: np.ndarray
    c1: float
    amp: float
    delta: float
    left: object
    right: object

    def g1(self, z, omz=None) -> tuple[np.ndarray, np.ndarray]:
        """G_1 and dG_1/dz.  ``omz`` may carry an accurate value of 1 - z."""
        z = np.asarray(z, dtype=float)
        omz = 1.0 - z if omz is None else np.asarray(omz, dtype=float)
        z, omz = np.broadcast_arrays(z, omz)
        g = np.empty(z.shape)
        dg = np.empty(z.shape)
        d = self.delta
        m0 = z < d
        m1 = (z >= d) & (z <= 0.5)
        m2 = (z > 0.5) & (omz > d)
        m3 = ~(m0 | m1 | m2)
        if m0.any():
            v0, d0 = _series(self.a0, 0.0, z[m0])
            v1, d1 = _series(self.a1, 5.0 / 3.0, z[m0])
            g[m0] = v0 + self.c1 * v1
            dg[m0] = d0 + self.c1 * d1
        if m1.any():
            y = self.left(z[m1])
            g[m1], dg[m1] = y[0], y[1]
        if m2.any():
            y = self.right(z[m2])
            g[m2], dg[m2] = y[0], y[1]
        if m3.any():
            v, dv = _series(self.b, 2.0 / 3.0, omz[m3])
            g[m3] = self.amp * v
            dg[m3] = -self.amp * dv
        return g, dg


@lru_cache(maxsize=1)
def n2_solution(delta: float = 0.1, n_terms: int = 80, rtol: float = 1e-13) -> N2Solution:
    """Solve the two-point connection problem for G_1 (cached)."""
    cz0 = [np.concatenate([[0.0], c]) for c in ODE_COEFFS_Z]  # multiply by z
    a0 = frobenius_coefficients(cz0, 0.0, n_terms)
    a1 = frobenius_coefficients(cz0, 5.0 / 3.0, n_terms)
    cu = (np.array([-2.0, 2.0]), np.array([0.0, 4.0, -2.0]), np.array([0.0, 0.0, 3.0, -3.0]))
    b = frobenius_coefficients(cu, 2.0 / 3.0, n_terms)

    kw = dict(method="DOP853", rtol=rtol, atol=1e-15, dense_output=True)

    def shoot_left(a, r):
        v, dv = _series(a, r, np.array(delta))
        return solve_ivp(_rhs, (delta, 0.5), [float(v), float(dv)], **kw)

    s0 = shoot_left(a0, 0.0)
    s1 = shoot_left(a1, 5.0 / 3.0)
    v, dv = _series(b, 2.0 / 3.0, np.array(delta))
    sr = solve_ivp(_rhs, (1.0 - delta, 0.5), [float(v), -float(dv)], **kw)
    p0, p1, q = s0.y[:, -1], s1.y[:, -1], sr.y[:, -1]
    # phi0 + c1 phi1 = amp psi  (value and slope at z = 1/2)
    mat = np.array([[p1[0], -q[0]], [p1[1], -q[1]]])
    c1, amp = np.linalg.solve(mat, -p0)

    def left(zz, _s0=s0.sol, _s1=s1.sol, _c1=c1):
        return _s0(zz) + _c1 * _s1(zz)

    def right(zz, _sr=sr.sol, _amp=amp):
        return _amp * _sr(zz)

    return N2Solution(a0, a1, b, float(c1), float(amp), delta, left, right)


def g_total(z) -> np.ndarray:
    """Closed-form G_1(z) + G_2(z) = (1 - z + z^2) / (1 - z)."""
    z = np.asarray(z, dtype=float)
    return (1.0 - z + z * z) / (1.0 - z)


def cross_ratio(x) -> tuple[np.ndarray, np.ndarray]:
    """z and 1 - z for four increasing points, both computed without cancellation."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3, x4 = (x[..., i] for i in range(4))
    den = (x3 - x1) * (x4 - x2)
    return (x2 - x1) * (x4 - x3) / den, (x3 - x2) * (x4 - x1) / den


def _pair_diffs(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 4:
        raise ValueError("need four points")
    x1, x2, x3, x4 = (x[..., i] for i in range(4))
    return x2 - x1, x3 - x1, x4 - x1, x3 - x2, x4 - x2, x4 - x3


def log_pure_n2_diffs(pattern: int, d12, d13, d14, d23, d24, d34) -> np.ndarray:
    """:func:`log_pure_n2` from the six positive pairwise distances."""
    sol = n2_solution()
    den = d13 * d24
    z, omz = d12 * d34 / den, d23 * d14 / den
    if pattern == 0:
        g, _ = sol.g1(z, omz)
        return np.log(g) - np.log(d12) - np.log(d34)
    if pattern == 1:
        g, _ = sol.g1(omz, z)
        return np.log(g) - np.log(d23) - np.log(d14)
    raise ValueError("pattern index must be 0 or 1")


def grad_log_pure_n2_diffs(pattern: int, d12, d13, d14, d23, d24, d34) -> np.ndarray:
    """:func:`grad_log_pure_n2` from the six positive pairwise distances."""
    sol = n2_solution()
    den = d13 * d24
    z, omz = d12 * d34 / den, d23 * d14 / den
    r21, r31, r41 = 1 / d12, 1 / d13, 1 / d14
    r32, r42, r43 = 1 / d23, 1 / d24, 1 / d34
    dlogz = np.stack([-r21 + r31, r21 + r42, -r43 - r31, r43 - r42], axis=-1)
    if pattern == 0:
        g, dg = sol.g1(z, omz)
        pre = np.stack([r21, -r21, r43, -r43], axis=-1)
        return pre + (dg * z / g)[..., None] * dlogz
    if pattern == 1:
        g, dg = sol.g1(omz, z)
        pre = np.stack([r41, r32, -r32, -r41], axis=-1)
        return pre - (dg * z / g)[..., None] * dlogz
    raise ValueError("pattern index must be 0 or 1")


def log_pure_n2(pattern: int, x) -> np.ndarray:
    """log Z_alpha at kappa = 3 for four increasing points.

    Parameters
    ----------
    pattern : {0, 1}
        0 for {{1,2},{3,4}}, 1 for {{1,4},{2,3}}.
    """
    return log_pure_n2_diffs(pattern, *_pair_diffs(x))


def grad_log_pure_n2(pattern: int, x) -> np.ndarray:
    """Gradient of :func:`log_pure_n2` in the four coordinates."""
    return grad_log_pure_n2_diffs(pattern, *_pair_diffs(x))
