"""Bound functions, boundary Poisson kernels and GFF level-line probabilities.

Array versions (prefixed ``log_``) take a trailing point axis and return
natural logarithms; they broadcast over leading batch axes.
"""
from __future__ import annotations

import numpy as np

from ..combinat import link_pattern_table

__all__ = [
    "log_poisson_kernel",
    "log_b_alpha",
    "log_b_alpha_all",
    "log_b_total",
    "log_gff_prob",
    "compare_b_sides",
]


def log_poisson_kernel(x, y) -> np.ndarray:
    """log H(x, y) = -2 log |y - x| for the upper half-plane."""
    d = np.abs(np.asarray(y, float) - np.asarray(x, float))
    if np.any(d == 0):
        raise ValueError("Poisson kernel is singular at coinciding points")
    return -2.0 * np.log(d)


def log_b_alpha(links: np.ndarray, x) -> np.ndarray:
    """log B_alpha = -sum over links of log |x_b - x_a|.

    Parameters
    ----------
    links : ndarray of shape (N, 2)
        Zero-based link indices.
    """
    x = np.asarray(x, dtype=float)
    links = np.asarray(links, dtype=np.intp).reshape(-1, 2)
    if 2 * links.shape[0] != x.shape[-1]:
        raise ValueError("link pattern and point configuration differ in size")
    if links.shape[0] == 0:
        return np.zeros(x.shape[:-1])
    d = np.abs(x[..., links[:, 1]] - x[..., links[:, 0]])
    return -np.log(d).sum(axis=-1)


def log_b_alpha_all(x) -> np.ndarray:
    """log B_alpha for every link pattern, stacked on a new last axis."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    idx = link_pattern_table(n)
    if n == 0:
        return np.zeros(x.shape[:-1] + (1,))
    d = np.abs(x[..., idx[..., 1]] - x[..., idx[..., 0]])
    return -np.log(d).sum(axis=-1)


def _alt_exponents(m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    i, j = np.triu_indices(m, k=1)
    e = np.where((j - i) % 2 == 0, 1.0, -1.0)
    return i, j, e


def log_b_total(x) -> np.ndarray:
    """log of prod_{i<j} (x_j - x_i)^{(-1)^{j-i}}."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    if m == 0:
        return np.zeros(x.shape[:-1])
    i, j, e = _alt_exponents(m)
    return (e * np.log(x[..., j] - x[..., i])).sum(axis=-1)


def log_gff_prob(a: int, b: int, x) -> np.ndarray:
    """log P^(a,b): level line from x_a terminating at x_b (1-based indices).

    The product formula is stated for odd ``a`` and even ``b``; for the
    reverse parity assignment the two roles are swapped so that the
    probability of the pair is symmetric in its arguments.
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    if not (1 <= a <= m and 1 <= b <= m) or a == b:
        raise ValueError(f"indices ({a}, {b}) invalid for {m} points")
    if (a - b) % 2 == 0:
        raise ValueError(f"indices {a} and {b} have equal parity")
    if a % 2 == 0:
        a, b = b, a
    i = np.array([k for k in range(1, m + 1) if k not in (a, b)], dtype=np.intp)
    if i.size == 0:
        return np.zeros(x.shape[:-1])
    e = np.where(i % 2 == 0, 1.0, -1.0)
    xi = x[..., i - 1]
    r = np.log(np.abs(xi - x[..., a - 1, None])) - np.log(np.abs(xi - x[..., b - 1, None]))
    return (e * r).sum(axis=-1)


def compare_b_sides(j: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Both sides, in log form, of the identity relating B^(N)(x) to B^(N-1)(y).

    Here y is x with x_j and x_{2N} deleted (1-based j in 1..2N-1).  The
    right-hand side is the explicit product of the factors involving x_j
    or x_{2N} times the squared cross factors of y.
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    if not 1 <= j <= m - 1:
        raise ValueError(f"j={j} out of range")
    keep = [i for i in range(m) if i not in (j - 1, m - 1)]
    y = x[..., keep]
    lhs = log_b_total(x) - log_b_total(y)
    xj = x[..., j - 1]
    xl = x[..., m - 1]
    rhs = (-1.0) ** j * np.log(xl - xj)
    for l in range(1, m):
        if l != j:
            rhs = rhs + (-1.0) ** (l - j) * np.log(np.abs(x[..., l - 1] - xj))
    for k in range(1, m):
        if k != j:
            rhs = rhs + (-1.0) ** k * np.log(xl - x[..., k - 1])
    for k in range(1, j):
        for l in range(j, m - 1):
            rhs = rhs + 2.0 * (-1.0) ** (l - k + 1) * np.log(y[..., l - 1] - y[..., k - 1])
    return lhs, rhs
