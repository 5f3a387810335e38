"""Pfaffian and Hafnian evaluation of the Ising partition function.

For kappa = 3 the total partition function is the Pfaffian of the
antisymmetric matrix A_ij = 1 / (x_j - x_i).  Two evaluation paths are
provided: the signed sum over all pair partitions (exponential cost, used
as an oracle) and skew-symmetric Gaussian elimination with partial
pivoting (cubic cost).  All array functions accept a trailing point axis
and broadcast over any leading batch axes.
"""
from __future__ import annotations

import numpy as np

from ..combinat import PAIR_PARTITION_CAP, EnumerationCapError, pairing_table

__all__ = [
    "PfaffianBreakdown",
    "cauchy_matrix",
    "pfaffian_slogdet",
    "ising_sum",
    "hafnian_sum_array",
    "log_ising_pfaffian",
    "grad_log_ising",
]

_CHUNK_ELEMENTS = 4_000_000


class PfaffianBreakdown(ArithmeticError):
    """Elimination met an exactly vanishing pivot column."""


def cauchy_matrix(x: np.ndarray) -> np.ndarray:
    """The antisymmetric matrix A_ij = 1 / (x_j - x_i), zero diagonal."""
    x = np.asarray(x, dtype=float)
    d = x[..., None, :] - x[..., :, None]
    n = x.shape[-1]
    eye = np.eye(n, dtype=bool)
    with np.errstate(divide="ignore"):
        a = 1.0 / np.where(eye, 1.0, d)
    a[..., eye] = 0.0
    return a


def pfaffian_slogdet(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sign and log-modulus of the Pfaffian of antisymmetric matrices.

    Parlett-Reid style reduction: at every odd column the entry of largest
    modulus below the diagonal is pivoted into place and the trailing block
    is updated by a skew rank-two correction.

    Parameters
    ----------
    a : ndarray of shape (..., n, n)
        Antisymmetric, n even.  Not modified.

    Returns
    -------
    sign, logabs : ndarray
        ``pf(a) = sign * exp(logabs)``.

    Raises
    ------
    PfaffianBreakdown
        If a pivot column is exactly zero for some batch member.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[-1]
    if a.shape[-2] != n or n % 2:
        raise ValueError("need square matrices of even order")
    batch = a.shape[:-2]
    a = a.reshape((-1, n, n))
    m = a.shape[0]
    sgn = np.ones(m)
    logabs = np.zeros(m)
    rows = np.arange(m)
    for k in range(0, n - 1, 2):
        kp = k + 1 + np.argmax(np.abs(a[:, k + 1:, k]), axis=1)
        swap = kp != k + 1
        if swap.any():
            perm = np.broadcast_to(np.arange(n), (m, n)).copy()
            perm[rows, k + 1] = kp
            perm[rows, kp] = k + 1
            a = a[rows[:, None, None], perm[:, :, None], perm[:, None, :]]
            sgn[swap] *= -1.0
        piv = a[:, k, k + 1]
        if np.any(piv == 0.0):
            raise PfaffianBreakdown("zero pivot column in skew elimination")
        sgn *= np.sign(piv)
        logabs += np.log(np.abs(piv))
        if k + 2 < n:
            tau = a[:, k, k + 2:] / piv[:, None]
            col = a[:, k + 2:, k + 1]
            a[:, k + 2:, k + 2:] += (
                tau[:, :, None] * col[:, None, :] - col[:, :, None] * tau[:, None, :]
            )
    return sgn.reshape(batch), logabs.reshape(batch)


def _check_even(x: np.ndarray) -> int:
    m = x.shape[-1]
    if m % 2 or m < 2:
        raise ValueError("need an even number of points")
    return m // 2


def _pairing_sum(x: np.ndarray, power: int, signed: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = _check_even(x)
    if n > PAIR_PARTITION_CAP:
        raise EnumerationCapError(f"N={n} exceeds the pair-partition cap")
    idx, signs = pairing_table(n)
    flat = x.reshape(-1, 2 * n)
    out = np.empty(flat.shape[0])
    step = max(1, _CHUNK_ELEMENTS // (idx.shape[0] * n))
    for s in range(0, flat.shape[0], step):
        xs = flat[s:s + step]
        d = xs[:, idx[..., 1]] - xs[:, idx[..., 0]]
        terms = np.prod(d, axis=-1) ** (-power)
        if signed:
            terms = terms * signs
        out[s:s + step] = terms.sum(axis=-1)
    return out.reshape(x.shape[:-1])


def ising_sum(x) -> np.ndarray:
    """Signed sum over pair partitions of prod 1 / (x_b - x_a)."""
    return _pairing_sum(x, 1, True)


def hafnian_sum_array(x) -> np.ndarray:
    """Unsigned sum over pair partitions of prod (x_b - x_a)^(-2)."""
    return _pairing_sum(x, 2, False)


def log_ising_pfaffian(x) -> np.ndarray:
    """log of pf(1 / (x_j - x_i)) by elimination; raises if not positive."""
    x = np.asarray(x, dtype=float)
    _check_even(x)
    sgn, logabs = pfaffian_slogdet(cauchy_matrix(x))
    if np.any(sgn <= 0):
        raise PfaffianBreakdown("Pfaffian is not positive; points not increasing?")
    return logabs


def grad_log_ising(x) -> np.ndarray:
    """Gradient of log pf(A) in all coordinates.

    Uses d log pf(A) = tr(A^{-1} dA) / 2, which for the Cauchy-type
    matrix collapses to  d_j log pf = sum_k (A^{-1})_{kj} A_{jk}^2.

    Returns
    -------
    ndarray with the same shape as ``x``.
    """
    x = np.asarray(x, dtype=float)
    _check_even(x)
    a = cauchy_matrix(x)
    try:
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise PfaffianBreakdown("singular Cauchy matrix") from exc
    return np.einsum("...kj,...jk->...j", inv, a * a)
