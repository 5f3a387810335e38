r"""Batch integrator for Loewner chains.

Many independent chains, each with its own starting configuration, are
advanced in lock step (each with its own time step).  Finished chains are
removed from the working arrays so that the cost per step tracks the number
of live chains.

Step size
    ``dt_i = min(dt_base_i * max(1, d_i / d0_i)**2, adapt * d_i**2)`` where
    ``d_i`` is the distance from W to the nearest tracked image and ``d0_i``
    its value at time 0.  The first factor lets the step grow with the
    local length scale once the curve has moved far away from every marked
    point, which keeps the cost of the long tail of the stopping time under
    control.  The second resolves close approaches.  A step that would
    carry W across an image is rejected; the Brownian increment is replaced
    by its bridge midpoint and the step length halved, until the step is
    accepted.

Stopping rules
    ``("target", k, levels)``
        record the state the first time |V^k - W| is below each of the
        thresholds ``levels`` (decreasing) while every other image is at
        least ``separation * |V^k - W|`` away from W, and stop after the
        last level.  The separation requirement keeps a third image from
        sitting inside the collapsing pair at the recorded times; it is
        still a stopping time, so martingale identities apply unchanged.
    ``"terminal"``
        the chain is stopped when a block of consecutive tracked points on
        one side of W has collapsed onto W.  Distances d_1 < d_2 < ... of the
        images on the right of W (and similarly on the left) are scanned;
        the block ending at the q-th point is accepted when
        d_q < epsilon_stop, the next scale (d_{q+1}, the nearest image on
        the other side, or the initial spread of the configuration) exceeds
        ``separation * d_q``, and the drift is dominated by the pair
        singularity at V^q: when the drift is a weighted sum of pair terms
        (see :class:`multisle.loewner.chain.Drift`), the weight of the terms
        pairing j with q must be at least ``1 - weight_tol``.  The last
        condition tells a genuine termination from a close approach of the
        curve to a boundary point it cannot hit (after which the images
        re-open) and from a collapse aimed at an inner point of the block,
        neither of which is visible in the distances alone.  The terminal
        index is the outermost point of the block.  When the curve heads to
        a distant point, the points in between are enclosed in a shrinking
        pocket and their images collapse together with the target, so the
        nearest image is not in general the terminal point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chain import ChainState, DriftFn, euler_step, layout
from .config import TraceConfig

__all__ = ["BatchResult", "run_batch", "classify_terminal"]

_MAX_HALVINGS = 60


@dataclass
class BatchResult:
    """Outcome of :func:`run_batch` (all arrays have a leading sample axis).

    Attributes
    ----------
    final : ChainState
        State at the stopping time (or at ``max_steps`` if unresolved).
    resolved : ndarray of bool
    steps, rejections : ndarray of int
    final_min_gap : ndarray
        Distance from W to the nearest image at the stop.
    checkpoints : list of ChainState
        Snapshots at the requested times; chains that stopped earlier
        contribute their stopped state.
    levels : list of ChainState
        Snapshots at the target thresholds (``target`` rule only).
    """

    final: ChainState
    resolved: np.ndarray
    steps: np.ndarray
    rejections: np.ndarray
    final_min_gap: np.ndarray
    checkpoints: list = field(default_factory=list)
    levels: list = field(default_factory=list)


def classify_terminal(j: int, off: np.ndarray, eps: np.ndarray,
                      scale: np.ndarray, separation: float,
                      weights: np.ndarray | None = None, weight_tol: float = 1e-3) -> np.ndarray:
    """Terminal index per chain (1-based), 0 where no block qualifies yet.

    Parameters
    ----------
    off : ndarray (n, 2N)
        Signed offsets V^k - W with W at slot j.
    weights : ndarray (n, 2N), optional
        Pair weights of the drift; block q is accepted only if
        ``weights[:, q - 1] >= 1 - weight_tol``.
    """
    n, m = off.shape
    j0 = j - 1
    right = np.arange(j0 + 1, m)
    left = np.arange(j0 - 1, -1, -1)
    dr = off[:, right]
    dl = -off[:, left]
    inf = np.full((n, 1), np.inf)
    near_r = dr[:, :1] if right.size else inf
    near_l = dl[:, :1] if left.size else inf
    best_ratio = np.zeros(n)
    best = np.zeros(n, dtype=np.int64)
    for d, idx, other in ((dr, right, near_l), (dl, left, near_r)):
        if idx.size == 0:
            continue
        nxt = np.concatenate([d[:, 1:], inf], axis=1)
        beyond = np.minimum(np.minimum(nxt, other), scale[:, None])
        ratio = beyond / d
        ok = (d < eps[:, None]) & (ratio >= separation)
        if weights is not None:
            ok &= weights[:, idx] >= 1.0 - weight_tol
        ratio = np.where(ok, ratio, 0.0)
        q = np.argmax(ratio, axis=1)
        r = ratio[np.arange(n), q]
        upd = r > best_ratio
        best_ratio = np.where(upd, r, best_ratio)
        best = np.where(upd, idx[q] + 1, best)
    return best


def run_batch(
    x0: np.ndarray,
    j: int,
    drift: DriftFn,
    rng: np.random.Generator,
    cfg: TraceConfig,
    *,
    kappa: float = 3.0,
    stop="terminal",
    checkpoints: Sequence[float] = (),
    record_path: bool = False,
) -> BatchResult:
    """Integrate independent chains until each one stops.

    Parameters
    ----------
    x0 : ndarray of shape (n, 2N)
        Starting configuration of every chain.
    j : int
        Growing index (1-based), common to all chains.
    drift : callable
        ``drift(seg)`` returning kappa * d_j log Z per row.
    stop : "terminal" or ("target", k, levels)
        Stopping rule, see the module docstring.  ``levels`` are absolute
        thresholds of shape (L,) or per chain (n, L); when ``None`` a single
        level equal to the configured epsilon_stop is used.
    checkpoints : sequence of float
        Times at which snapshots are taken.
    record_path : bool
        Store (t, W, dt) of every accepted step; only sensible for n = 1.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    n, m = x0.shape
    sk = float(np.sqrt(kappa))
    weights_fn = getattr(drift, "weights", None)
    dt_base, eps = cfg.resolve(x0)
    scale = x0[:, -1] - x0[:, 0]
    st = ChainState.start(x0, j)
    lay = layout(m, j)
    cols = st.others
    om = lay.off_mat
    cps = np.sort(np.asarray(checkpoints, dtype=float))
    n_cp = cps.size

    rest_cols = np.array([], dtype=np.intp)
    if stop == "terminal":
        target = None
        levels = None
    else:
        kind, target, levels = stop
        if kind != "target":
            raise ValueError(f"unknown stop rule {stop!r}")
        levels = eps[:, None] if levels is None else np.asarray(levels, dtype=float)
        levels = np.broadcast_to(levels, (n, levels.shape[-1])).copy()
        rest_cols = np.array([c for c in cols if c != target - 1], dtype=np.intp)
        if np.any(np.diff(levels, axis=1) >= 0):
            raise ValueError("target levels must be decreasing")

    out = st.copy()
    resolved = np.zeros(n, dtype=bool)
    steps = np.zeros(n, dtype=np.int64)
    rejections = np.zeros(n, dtype=np.int64)
    final_gap = np.zeros(n)
    cp_states = [st.copy() for _ in range(n_cp)]
    lv_states = [st.copy() for _ in range(levels.shape[1])] if levels is not None else []
    path = [] if record_path else None

    # live working arrays
    ids = np.arange(n)
    t = st.t.copy()
    W = st.W.copy()
    S = st.seg.copy()
    L = st.logD.copy()
    dtb = dt_base.copy()
    ep = eps.copy()
    sc = scale.copy()
    nsteps = np.zeros(n, dtype=np.int64)
    nrej = np.zeros(n, dtype=np.int64)
    next_cp = np.zeros(n, dtype=np.int64)
    next_lv = np.zeros(n, dtype=np.int64)
    lv = levels.copy() if levels is not None else None

    def snapshot(store: ChainState, rows_local, rows_global):
        store.t[rows_global] = t[rows_local]
        store.W[rows_global] = W[rows_local]
        store.seg[rows_global] = S[rows_local]
        store.logD[rows_global] = L[rows_local]

    def check_stop():
        """Return local rows that stop now and their terminal indices."""
        if target is None:
            off = S @ om
            term = classify_terminal(j, off, ep, sc, cfg.separation)
            if weights_fn is not None and term.any():
                r = np.nonzero(term)[0]
                term[r] = classify_terminal(j, off[r], ep[r], sc[r], cfg.separation,
                                            weights_fn(S[r]), cfg.weight_tol)
            return term > 0, term
        off = S @ om
        d = np.abs(off[:, target - 1])
        if rest_cols.size:
            clear = np.min(np.abs(off[:, rest_cols]), axis=1) >= cfg.separation * d
        else:
            clear = np.ones(d.shape, dtype=bool)
        while True:
            cur = np.minimum(next_lv, lv.shape[1] - 1)
            hit = (next_lv < lv.shape[1]) & (d < lv[np.arange(lv.shape[0]), cur]) & clear
            if not hit.any():
                break
            rows = np.nonzero(hit)[0]
            for k in np.unique(next_lv[rows]):
                sel = rows[next_lv[rows] == k]
                snapshot(lv_states[k], sel, ids[sel])
                lv_states[k].T[ids[sel]] = t[sel]
                lv_states[k].terminal[ids[sel]] = target
            next_lv[rows] += 1
        done = next_lv >= lv.shape[1]
        return done, np.where(done, target, 0)

    def retire(mask, term):
        nonlocal ids, t, W, S, L, g0, b, dtb, ep, sc, nsteps, nrej, next_cp, next_lv, lv
        rows = np.nonzero(mask)[0]
        g = ids[rows]
        snapshot(out, rows, g)
        out.terminal[g] = term[rows]
        out.T[g] = t[rows]
        resolved[g] = term[rows] > 0
        steps[g] = nsteps[rows]
        rejections[g] = nrej[rows]
        final_gap[g] = np.min(np.abs(S[rows] @ om[:, cols]), axis=1)
        for k in range(n_cp):
            late = rows[next_cp[rows] <= k]
            snapshot(cp_states[k], late, ids[late])
        if lv is not None:
            for k in range(lv.shape[1]):
                late = rows[next_lv[rows] <= k]
                snapshot(lv_states[k], late, ids[late])
                lv_states[k].T[ids[late]] = t[late]
        keep = ~mask
        ids, t, W, S, L, b = ids[keep], t[keep], W[keep], S[keep], L[keep], b[keep]
        dtb, ep, sc, g0 = dtb[keep], ep[keep], sc[keep], g0[keep]
        nsteps, nrej, next_cp, next_lv = nsteps[keep], nrej[keep], next_cp[keep], next_lv[keep]
        if lv is not None:
            lv = lv[keep]

    adj = [i for i in (lay.adj_left, lay.adj_right) if i >= 0]
    g0 = np.min(S[:, adj], axis=1)
    b = drift(S)
    # checkpoints at t = 0 and degenerate starts
    for k in range(n_cp):
        if cps[k] <= 0:
            snapshot(cp_states[k], np.arange(n), ids)
            next_cp[:] = k + 1
    if target is None:
        absoff = np.abs(S @ om[:, cols])
        degenerate = np.min(S, axis=1) <= ep
        if degenerate.any():
            nearest = cols[np.argmin(absoff, axis=1)] + 1
            retire(degenerate, np.where(degenerate, nearest, 0))
    else:
        done, term = check_stop()
        if done.any():
            retire(done, term)

    while ids.size:
        gap = np.min(S[:, adj], axis=1)
        dt = np.minimum(dtb * np.maximum(1.0, gap / g0) ** 2, cfg.adapt * gap * gap)
        if n_cp:
            nxt = cps[np.minimum(next_cp, n_cp - 1)]
            dt = np.where(next_cp < n_cp, np.minimum(dt, nxt - t), dt)
            dt = np.maximum(dt, 1e-300)
        dB = np.sqrt(dt) * rng.standard_normal(ids.size)
        Wn, Sn, Ln, crossed = euler_step(lay, W, S, L, b, dB, dt, sk, cfg.scheme)
        halvings = 0
        while crossed.any():
            r = np.nonzero(crossed)[0]
            halvings += 1
            if halvings > _MAX_HALVINGS:
                raise FloatingPointError("step rejection did not terminate")
            nrej[r] += 1
            dB[r] = 0.5 * dB[r] + 0.5 * np.sqrt(dt[r]) * rng.standard_normal(r.size)
            dt[r] *= 0.5
            w2, s2, l2, c2 = euler_step(lay, W[r], S[r], L[r], b[r], dB[r], dt[r], sk, cfg.scheme)
            Wn[r], Sn[r], Ln[r] = w2, s2, l2
            crossed[:] = False
            crossed[r] = c2
        t = t + dt
        W, S, L = Wn, Sn, Ln
        b = drift(S)
        nsteps += 1
        if path is not None:
            path.append((t[0], W[0], dt[0]))

        if n_cp:
            while True:
                pend = next_cp < n_cp
                hit = pend & (t >= cps[np.minimum(next_cp, n_cp - 1)] * (1 - 1e-12))
                if not hit.any():
                    break
                rows = np.nonzero(hit)[0]
                for k in np.unique(next_cp[rows]):
                    sel = rows[next_cp[rows] == k]
                    snapshot(cp_states[k], sel, ids[sel])
                next_cp[rows] += 1

        done, term = check_stop()
        over = (nsteps >= cfg.max_steps) & ~done
        if done.any() or over.any():
            retire(done | over, np.where(done, term, 0))

    res = BatchResult(out, resolved, steps, rejections, final_gap, cp_states, lv_states)
    if path is not None:
        res.path = np.array(path).reshape(-1, 3)
    return res
