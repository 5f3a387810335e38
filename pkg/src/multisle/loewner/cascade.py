r"""Monte Carlo evaluation of pure partition functions through the cascade.

Growing the curve of a link {a, b} as a chordal SLE from x_a to x_b, the
process

.. math::

    M_t = \prod_{i \ne a, b} g_t'(x_i)^h \; Z_\alpha(g_t(x)) \, (V^b_t - W_t)^{2h}

is a martingale with M_0 = Z_alpha(x) H(x_a, x_b)^{-h}.  When the link joins
neighbouring points (b = a + 1), every other marked point stays outside the
curve, and as V^b - W -> 0 the partition function factorises into the
one-link function of the collapsing pair times Z_{alpha minus {a,b}} of the
remaining images.  Stopping when |V^b - W| first falls below epsilon gives
the estimator

.. math::

    Z_\alpha(x) \approx H(x_a, x_b)^h \,
        \mathbb{E}\Big[\prod_{i \ne a, b} g_T'(x_i)^h \;
        Z_{\alpha \setminus \{a,b\}}(g_T(x_i) : i \ne a, b)\Big].

The reduced function is evaluated exactly for at most two links at
kappa = 3 and otherwise by a nested single-sample estimate of the same
kind, which keeps the estimator unbiased up to the stopping error.  Every
planar pattern has a link between neighbours; the shortest such link is
used.  Two thresholds epsilon and epsilon / 10 are recorded along the same
paths to expose the stopping bias.
"""
from __future__ import annotations

import math

import numpy as np

from ..combinat import LinkPattern, remove_link
from ..partfn.functions import N2_PATTERNS
from ..partfn.ode_n2 import log_pure_n2_diffs
from ..partfn.types import ISING, PartitionValue, PointConfig, SleParams
from .chain import layout, make_drift
from .config import McConfig, TraceConfig, make_rng
from .engine import run_batch
from .parallel import map_batches

__all__ = ["cascade_z_pure", "cascade_samples", "MAX_CASCADE_LINKS", "REFINE", "CASCADE_ADAPT"]

#: practicality cap on the number of links
MAX_CASCADE_LINKS = 4
#: ratio between the two stopping thresholds
REFINE = 10.0
#: step-size factor near the tip (``TraceConfig.adapt``) used by the cascade.
#: The reduced function is evaluated at the stopped images, so discretisation
#: error in the far points enters the estimate directly; the value is kept
#: explicit here even though it equals the general default.
CASCADE_ADAPT = 1e-3
#: stream key separating cascade batches from other uses of a seed
_STREAM = 3


def _choose_link(alpha: LinkPattern, X: np.ndarray) -> np.ndarray:
    """Per row, the left index a of the shortest neighbour link {a, a+1}."""
    cand = [a for a, b in alpha.links if b == a + 1]
    if not cand:  # pragma: no cover - impossible for planar patterns
        raise ValueError(f"{alpha} has no link between neighbours")
    gaps = np.stack([X[:, a] - X[:, a - 1] for a in cand], axis=1)
    return np.asarray(cand)[np.argmin(gaps, axis=1)]


def _log_z_exact(alpha: LinkPattern, D: np.ndarray, kappa: float) -> np.ndarray | None:
    """log Z_alpha from the pair-distance matrix rows D[:, pair_col], or None."""
    n = alpha.n_links
    if n == 0:
        return np.zeros(D.shape[0])
    lay = layout(2 * n, 1)
    col = lay.pair_col
    h = (6.0 - kappa) / (2.0 * kappa)
    if n == 1:
        return -2.0 * h * np.log(D[:, col(0, 1)])
    if n == 2 and kappa == 3.0:
        k = N2_PATTERNS.index(alpha)
        d = [D[:, col(a, b)] for a, b in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))]
        return log_pure_n2_diffs(k, *d)
    return None


def cascade_samples(
    alpha: LinkPattern,
    X: np.ndarray,
    params: SleParams,
    cfg: TraceConfig,
    rng: np.random.Generator,
    n_levels: int = 2,
) -> tuple[np.ndarray, np.ndarray]:
    """One cascade sample of Z_alpha per row of X.

    Returns
    -------
    samples : ndarray (n, n_levels)
        Unbiased (up to the stopping error) estimates of Z_alpha(X[i]) at
        the thresholds epsilon, epsilon / REFINE, ...
    unresolved : ndarray of bool (n,)
        Rows whose chain reached ``max_steps`` before the finest threshold.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, m = X.shape
    N = alpha.n_links
    if m != 2 * N:
        raise ValueError("pattern and configuration sizes differ")
    kappa = params.kappa
    h = params.h
    out = np.empty((n, n_levels))
    unresolved = np.zeros(n, dtype=bool)
    if N == 1:
        out[:] = (X[:, 1] - X[:, 0])[:, None] ** (-2.0 * h)
        return out, unresolved
    choice = _choose_link(alpha, X)
    _, eps = cfg.resolve(X)
    factors = REFINE ** -np.arange(n_levels)
    for a in np.unique(choice):
        rows = np.nonzero(choice == a)[0]
        b = a + 1
        Xg = X[rows]
        lay = layout(m, a)
        drift = make_drift("pair", a, m, params, target=b)
        res = run_batch(Xg, a, drift, rng, cfg, kappa=kappa,
                        stop=("target", b, eps[rows, None] * factors[None, :]))
        unresolved[rows] = ~res.resolved
        rest = [i for i in range(m) if i not in (a - 1, b - 1)]
        sub = remove_link(alpha, a)
        # pairs among the remaining points, in the column order of a fresh layout
        sub_pairs = [(rest[p], rest[q]) for p in range(m - 2) for q in range(p + 1, m - 2)]
        cols = [lay.pair_col(p, q) for p, q in sub_pairs]
        log_h = -2.0 * h * np.log(Xg[:, b - 1] - Xg[:, a - 1])
        for k, st in enumerate(res.levels):
            log_cov = h * np.nansum(np.where(np.isin(np.arange(m), [a - 1, b - 1]), 0.0, st.logD), axis=1)
            D = (st.seg @ lay.pair_mat)[:, cols]
            log_zl = _log_z_exact(sub, D, kappa)
            if log_zl is None:
                # nested single-sample estimate at the finest level only
                P = st.seg @ lay.pair_mat
                pos = np.zeros((len(rows), m - 2))
                for q in range(1, m - 2):
                    pos[:, q] = P[:, lay.pair_col(rest[0], rest[q])]
                inner, un = cascade_samples(sub, pos, params, cfg, rng, n_levels=1)
                unresolved[rows] |= un
                zl = inner[:, 0]
                out[rows, k] = np.exp(log_h + log_cov) * zl
            else:
                out[rows, k] = np.exp(log_h + log_cov + log_zl)
    return out, unresolved


def _cascade_batch(task):
    alpha, x, params, cfg, seed, k, size = task
    rng = make_rng(seed, _STREAM, k)
    return cascade_samples(alpha, np.tile(x, (size, 1)), params, cfg, rng)


def cascade_z_pure(
    alpha: LinkPattern,
    x,
    params: SleParams = ISING,
    cfg: TraceConfig | None = None,
    mc: McConfig | None = None,
) -> PartitionValue:
    """Cascade Monte Carlo estimate of the pure partition function Z_alpha.

    The returned value is the estimate at the finer threshold.  ``details``
    holds both levels, their standard errors, the bias flag (levels
    differing by more than three combined standard errors) and the number
    of unresolved runs.

    Examples
    --------
    >>> v = cascade_z_pure(LinkPattern([(1, 2)]), (0.0, 2.0))
    >>> v.value, v.stderr
    (0.5, 0.0)
    """
    x = x if isinstance(x, PointConfig) else PointConfig(x)
    N = alpha.n_links
    if N != x.n:
        raise ValueError(f"pattern has {N} links but {x.n} point pairs given")
    if N > MAX_CASCADE_LINKS:
        raise ValueError(f"cascade limited to {MAX_CASCADE_LINKS} links")
    if not params.is_ising and N > 1:
        raise ValueError("the cascade estimator needs kappa = 3 for two or more links")
    cfg = cfg or TraceConfig(adapt=CASCADE_ADAPT)
    mc = mc or McConfig()
    if N == 1:
        return PartitionValue(-2.0 * params.h * math.log(x[1] - x[0]))
    tasks = [(alpha, x.array, params, cfg, mc.seed, k, size) for k, size in mc.batches()]
    parts = map_batches(_cascade_batch, tasks, mc.jobs)
    S = np.concatenate([p[0] for p in parts])
    unres = np.concatenate([p[1] for p in parts])
    n = S.shape[0]
    mean = S.mean(axis=0)
    se = S.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(S.shape[1], np.inf)
    diff = float(mean[0] - mean[1])
    comb = float(math.hypot(se[0], se[1]))
    dd = S[:, 0] - S[:, 1]
    paired = float(dd.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    value, err = float(mean[-1]), float(se[-1])
    details = {
        "link": int(np.bincount(_choose_link(alpha, x.array[None, :])).argmax()),
        "levels": [float(v) for v in mean],
        "level_stderr": [float(v) for v in se],
        "level_eps_factor": [float(REFINE ** -k) for k in range(S.shape[1])],
        "level_difference": diff,
        "combined_stderr": comb,
        "paired_stderr": paired,
        "bias_flag": bool(abs(diff) > 3.0 * comb),
        "unresolved": int(unres.sum()),
    }
    converged = bool(err <= mc.target_rel_se * abs(value))
    if not value > 0:
        raise FloatingPointError("cascade estimate is not positive")
    return PartitionValue(math.log(value), stderr=err, n_samples=n, converged=converged, details=details)
