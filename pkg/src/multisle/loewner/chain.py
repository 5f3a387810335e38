r"""Loewner chain state, drift fields and the Euler-Maruyama step.

The chain grows from the marked point x_j.  Its state is the driving value
W_t together with the images V^i_t = g_t(x_i) and the log-derivatives
log g_t'(x_i) of the other marked points:

.. math::

    dW_t = \sqrt{\kappa}\, dB_t + \kappa\, \partial_j \log Z(V_t^1, \dots, W_t, \dots, V_t^{2N})\, dt,
    \qquad dV^i_t = \frac{2\,dt}{V^i_t - W_t},
    \qquad d \log g_t'(x_i) = -\frac{2\,dt}{(V^i_t - W_t)^2}.

Representation
    The images are stored through the positive gaps ``seg`` between
    consecutive points of the sorted list (V^1, ..., W, ..., V^{2N}).  The
    Euler update of a gap not touching W is multiplicative,
    ``s <- s (1 - 2 dt / ((V^i - W)(V^{i+1} - W)))``, which is the same
    arithmetic as updating both endpoints but keeps full relative precision
    when marked points are squeezed together inside a pocket of the hull.
    The two gaps adjacent to W absorb the driving increment.

Schemes
    ``"euler"`` is the plain Euler-Maruyama step written above.  ``"slit"``
    keeps the Euler-Maruyama update of W but moves the images with the
    exact flow for a driving value frozen over the step, the vertical-slit
    map V <- W + sign(V - W) sqrt((V - W)^2 + 4 dt), and updates
    log g' with its derivative.  Both are first order; the slit scheme
    makes the tracked images agree with the maps used to reconstruct the
    trace, so that |V^k - W| measures the true distance in the image
    plane down to round-off.

All arrays carry a leading sample axis so that many independent chains are
advanced together.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from ..combinat import LinkPattern, pairing_table
from ..partfn.functions import N2_PATTERNS
from ..partfn.ode_n2 import grad_log_pure_n2_diffs
from ..partfn.pfaffian import grad_log_ising
from ..partfn.types import SleParams

__all__ = [
    "StepRejected",
    "Layout",
    "layout",
    "ChainState",
    "advance_chain",
    "euler_step",
    "drift_field",
    "make_drift",
    "DriftFn",
    "Drift",
    "SCHEMES",
]

#: drift(seg) -> kappa * d_j log Z, one value per row
DriftFn = Callable[[np.ndarray], np.ndarray]


class Drift:
    """Drift field with an optional decomposition into pair terms.

    Parameters
    ----------
    fn : callable
        ``fn(seg)`` returning kappa * d_j log Z per row.
    weights : callable, optional
        ``weights(seg)`` returning an (n, 2N) array whose column q is the
        share of the partition function carried by terms that pair the
        growing point with q.  Used by the terminal rule.
    """

    def __init__(self, fn: DriftFn, weights: DriftFn | None = None):
        self.fn = fn
        self.weights = weights

    def __call__(self, seg: np.ndarray) -> np.ndarray:
        return self.fn(seg)


def _one_hot(m: int, q: int) -> DriftFn:
    def weights(seg):
        w = np.zeros((seg.shape[0], m))
        w[:, q - 1] = 1.0
        return w

    return weights


class StepRejected(ArithmeticError):
    """A step would move W across a tracked image; retry with a smaller dt."""

    def __init__(self, mask: np.ndarray):
        super().__init__(f"{int(np.sum(mask))} chain(s) crossed a marked image")
        self.mask = mask


@dataclass(frozen=True)
class Layout:
    """Index bookkeeping for m sorted points with the driving value at slot j.

    Attributes
    ----------
    off_mat : ndarray (m-1, m)
        ``seg @ off_mat`` gives the signed offsets V^k - W (0 at slot j).
    pair_mat : ndarray (m-1, m(m-1)/2)
        ``seg @ pair_mat`` gives x_b - x_a for all pairs a < b as sums of
        positive gaps.
    pairs : ndarray (P, 2)
        Zero-based pairs in the column order of ``pair_mat``.
    """

    m: int
    j: int
    others: np.ndarray
    adj_right: int
    adj_left: int
    inner: np.ndarray
    off_mat: np.ndarray
    pair_mat: np.ndarray
    pairs: np.ndarray

    def pair_col(self, a: int, b: int) -> int:
        """Column of the zero-based pair (a, b), a < b."""
        m = self.m
        return a * (2 * m - a - 1) // 2 + (b - a - 1)


@lru_cache(maxsize=None)
def layout(m: int, j: int) -> Layout:
    j0 = j - 1
    others = np.array([i for i in range(m) if i != j0], dtype=np.intp)
    off = np.zeros((m - 1, m))
    for k in range(m):
        if k > j0:
            off[j0:k, k] = 1.0
        elif k < j0:
            off[k:j0, k] = -1.0
    pairs = np.array([(a, b) for a in range(m) for b in range(a + 1, m)], dtype=np.intp)
    pm = np.zeros((m - 1, len(pairs)))
    for c, (a, b) in enumerate(pairs):
        pm[a:b, c] = 1.0
    inner = np.array([i for i in range(m - 1) if i != j0 and i != j0 - 1], dtype=np.intp)
    return Layout(
        m, j, others,
        j0 if j0 < m - 1 else -1,
        j0 - 1 if j0 > 0 else -1,
        inner, off, pm, pairs,
    )


@dataclass
class ChainState:
    """State of one or more Loewner chains started from the same index.

    Attributes
    ----------
    j : int
        Growing index (1-based).
    t, W : ndarray of shape (n,)
    seg : ndarray of shape (n, 2N - 1)
        Gaps between consecutive sorted points with W at slot j.
    logD : ndarray of shape (n, 2N)
        log g_t'(x_i); the column of the growing index is NaN.
    terminal : ndarray of int, shape (n,)
        Index swallowed at the stopping time, 0 while running or unresolved.
    T : ndarray of shape (n,)
        Stopping time, NaN while running.
    """

    j: int
    t: np.ndarray
    W: np.ndarray
    seg: np.ndarray
    logD: np.ndarray
    terminal: np.ndarray = field(default=None)
    T: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.W.shape[0]
        if self.terminal is None:
            self.terminal = np.zeros(n, dtype=np.int64)
        if self.T is None:
            self.T = np.full(n, np.nan)

    @classmethod
    def start(cls, x, j: int) -> "ChainState":
        """Chains at time 0 for points of shape (2N,) or (n, 2N)."""
        x = np.atleast_2d(np.asarray(getattr(x, "points", x), dtype=float))
        m = x.shape[1]
        if not 1 <= j <= m:
            raise IndexError(f"growing index {j} out of range 1..{m}")
        seg = np.diff(x, axis=1)
        if np.any(seg <= 0):
            raise ValueError("points must be strictly increasing")
        logD = np.zeros_like(x)
        logD[:, j - 1] = np.nan
        n = x.shape[0]
        return cls(j, np.zeros(n), x[:, j - 1].copy(), seg, logD)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return self.seg.shape[1] + 1

    @property
    def layout(self) -> Layout:
        return layout(self.m, self.j)

    @property
    def others(self) -> np.ndarray:
        return self.layout.others

    def offsets(self) -> np.ndarray:
        """Signed V^k - W, shape (n, 2N), zero at the growing slot."""
        return self.seg @ self.layout.off_mat

    def points(self) -> np.ndarray:
        """Current images with W inserted at the growing slot."""
        return self.W[:, None] + self.offsets()

    @property
    def V(self) -> np.ndarray:
        """Images of the marked points, NaN at the growing slot."""
        p = self.points()
        p[:, self.j - 1] = np.nan
        return p

    def gaps(self) -> np.ndarray:
        """|V^i - W| for the tracked points, shape (n, 2N - 1)."""
        return np.abs(self.offsets()[:, self.others])

    def copy(self) -> "ChainState":
        return replace(
            self,
            t=self.t.copy(),
            W=self.W.copy(),
            seg=self.seg.copy(),
            logD=self.logD.copy(),
            terminal=self.terminal.copy(),
            T=self.T.copy(),
        )

    def take(self, rows) -> "ChainState":
        return ChainState(
            self.j, self.t[rows], self.W[rows], self.seg[rows], self.logD[rows],
            self.terminal[rows], self.T[rows],
        )


SCHEMES = ("euler", "slit")


def euler_step(lay: Layout, W, seg, logD, drift, dB, dt, sqrt_kappa, scheme: str = "euler"):
    """One step on raw arrays (see the module docstring for ``scheme``).

    Returns the new (W, seg, logD) and a boolean mask of rows whose driving
    value would cross one of the tracked images.
    """
    off = seg @ lay.off_mat
    dW = sqrt_kappa * dB + drift * dt
    Wn = W + dW
    sn = seg.copy()
    crossed = np.zeros(W.shape[0], dtype=bool)
    Ln = logD.copy()
    oth = lay.others
    o = off[:, oth]
    if scheme == "euler":
        if lay.inner.size:
            i = lay.inner
            fac = 1.0 - 2.0 * dt[:, None] / (off[:, i] * off[:, i + 1])
            sn[:, i] = seg[:, i] * fac
            crossed |= np.any(fac <= 0.0, axis=1)
        if lay.adj_right >= 0:
            e = seg[:, lay.adj_right]
            sn[:, lay.adj_right] = e + 2.0 * dt / e - dW
        if lay.adj_left >= 0:
            f = seg[:, lay.adj_left]
            sn[:, lay.adj_left] = f + 2.0 * dt / f + dW
        Ln[:, oth] = logD[:, oth] - 2.0 * dt[:, None] / (o * o)
    elif scheme == "slit":
        a = np.abs(off)
        R = np.sqrt(off * off + 4.0 * dt[:, None])
        if lay.inner.size:
            i = lay.inner
            sn[:, i] = seg[:, i] * (a[:, i] + a[:, i + 1]) / (R[:, i] + R[:, i + 1])
        if lay.adj_right >= 0:
            sn[:, lay.adj_right] = R[:, lay.adj_right + 1] - dW
        if lay.adj_left >= 0:
            sn[:, lay.adj_left] = R[:, lay.adj_left] + dW
        Ln[:, oth] = logD[:, oth] - 0.5 * np.log1p(4.0 * dt[:, None] / (o * o))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if lay.adj_right >= 0:
        crossed |= sn[:, lay.adj_right] <= 0.0
    if lay.adj_left >= 0:
        crossed |= sn[:, lay.adj_left] <= 0.0
    return Wn, sn, Ln, crossed


def advance_chain(
    state: ChainState,
    drift,
    dB,
    dt,
    params: SleParams | None = None,
    scheme: str = "euler",
) -> ChainState:
    """Advance every chain in ``state`` by one Euler-Maruyama step.

    Parameters
    ----------
    drift, dB, dt : float or ndarray of shape (n,)
        Drift value, Brownian increment and time step per chain.

    Raises
    ------
    StepRejected
        If some chain's driving value would cross a tracked image; the
        caller should retry with a smaller ``dt``.

    Examples
    --------
    >>> s = ChainState.start((0.0, 1.0), 1)
    >>> s = advance_chain(s, 3.0, 0.0, 0.01)
    >>> round(float(s.W[0]), 12), round(float(s.V[0, 1]), 12), round(float(s.logD[0, 1]), 12)
    (0.03, 1.02, -0.02)
    """
    kappa = (params or SleParams()).kappa
    n = state.n
    drift = np.broadcast_to(np.asarray(drift, dtype=float), (n,))
    dB = np.broadcast_to(np.asarray(dB, dtype=float), (n,))
    dt = np.broadcast_to(np.asarray(dt, dtype=float), (n,))
    if np.any(dt <= 0):
        raise ValueError("dt must be positive")
    Wn, sn, Ln, crossed = euler_step(
        state.layout, state.W, state.seg, state.logD, drift, dB, dt, np.sqrt(kappa), scheme
    )
    if crossed.any():
        raise StepRejected(crossed)
    return replace(state, t=state.t + dt, W=Wn, seg=sn, logD=Ln)


# ---------------------------------------------------------------------------
# drifts


#: largest N for which Ising drifts are summed over pairings explicitly
_PAIRING_SUM_MAX_N = 4
#: largest N for which pair weights are available
_WEIGHTS_MAX_N = 6


def _ising_drift(lay: Layout, kappa: float) -> Drift:
    m = lay.m
    n = m // 2
    j0 = lay.j - 1
    pm = lay.pair_mat
    om = lay.off_mat
    if n > _WEIGHTS_MAX_N:
        return Drift(lambda seg: kappa * grad_log_ising(seg @ om)[:, j0])
    idx, signs = pairing_table(n)
    cols = np.vectorize(lay.pair_col)(idx[..., 0], idx[..., 1])  # (M, N)
    hit = (idx == j0).any(axis=-1)
    pcol = cols[hit]  # column of j's pair in each pairing
    partner = np.where(idx[..., 0] == j0, idx[..., 1], idx[..., 0])[hit]
    # d_j of 1/(x_b - x_a) over itself is 1/(x_partner - x_j)
    psign = np.where(partner > j0, 1.0, -1.0)
    onehot = np.zeros((len(partner), m))
    onehot[np.arange(len(partner)), partner] = 1.0

    def terms(seg):
        d = seg @ pm
        return d, signs / np.prod(d[:, cols], axis=-1)

    def weights(seg):
        _, tm = terms(seg)
        return (tm @ onehot) / tm.sum(axis=1, keepdims=True)

    if n <= _PAIRING_SUM_MAX_N:
        def drift(seg):
            d, tm = terms(seg)
            num = (tm * psign / d[:, pcol]).sum(axis=1)
            return kappa * num / tm.sum(axis=1)
    else:
        def drift(seg):
            return kappa * grad_log_ising(seg @ om)[:, j0]

    return Drift(drift, weights)


def make_drift(kind: str, j: int, m: int, params: SleParams, *, target: int | None = None,
               alpha: LinkPattern | None = None) -> Drift:
    """Vectorised drift ``kappa * d_j log Z`` as a function of the gaps.

    Parameters
    ----------
    kind : {"ising_total", "pair", "pure"}
        Which partition function drives the chain.
    j : int
        Growing index (1-based).
    m : int
        Number of marked points 2N.
    target : int, optional
        For ``pair``: index of the target point.
    alpha : LinkPattern, optional
        For ``pure``: the pattern, N = 2 only.
    """
    lay = layout(m, j)
    kappa = params.kappa
    if kind == "ising_total":
        if not params.is_ising:
            raise ValueError("the Ising total partition function needs kappa = 3")
        return _ising_drift(lay, kappa)
    if kind == "pair":
        if target is None:
            if m != 2:
                raise ValueError("pair drift needs a target index")
            target = 3 - j
        if target == j or not 1 <= target <= m:
            raise ValueError(f"invalid target {target}")
        ocol = lay.off_mat[:, target - 1]
        c = 2.0 * params.h * kappa

        def drift(seg):
            return c / (seg @ ocol)

        return Drift(drift, _one_hot(m, target))
    if kind == "pure":
        if alpha is None or alpha.n_links != 2 or m != 4 or not params.is_ising:
            raise ValueError("pure drift is available for N = 2 at kappa = 3")
        k = N2_PATTERNS.index(alpha)
        j0 = j - 1
        pm = lay.pair_mat

        def drift(seg):
            d = seg @ pm  # pairs in order 12 13 14 23 24 34
            return kappa * grad_log_pure_n2_diffs(k, *(d[:, c] for c in range(6)))[:, j0]

        return Drift(drift, _one_hot(m, alpha.partner(j)))
    raise ValueError(f"unsupported drift kind {kind!r}")


def drift_field(kind: str, j: int, state: ChainState, params: SleParams, *,
                target: int | None = None, alpha: LinkPattern | None = None) -> np.ndarray:
    """kappa * d_j log Z at the current state, one value per chain.

    Examples
    --------
    >>> s = ChainState.start((0.0, 1.0), 1)
    >>> float(drift_field("pair", 1, s, SleParams(3.0), target=2)[0])
    3.0
    """
    if j != state.j:
        raise ValueError("j must be the growing index of the state")
    fn = make_drift(kind, j, state.m, params, target=target, alpha=alpha)
    return fn(state.seg)
