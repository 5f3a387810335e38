r"""Martingale check for the Ising-driven chain at two links.

For a pure pattern alpha, the ratio

.. math::

    M_t = \frac{\mathcal{Z}_\alpha}{\mathcal{Z}_{\mathrm{Ising}}}
          (V^1_t, \dots, W_t, \dots, V^{2N}_t)

is a bounded martingale for the chain driven by the total partition
function (the covariance factors of numerator and denominator cancel).  Its
mean is therefore the same at every checkpoint, and at a termination at a
point not linked to j in alpha it must have dropped to zero.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..combinat import LinkPattern
from ..partfn.functions import N2_PATTERNS
from ..partfn.ode_n2 import log_pure_n2_diffs
from ..partfn.types import ISING, PointConfig, SleParams
from ..report import CheckRow, Report
from .chain import ChainState, layout, make_drift
from .config import McConfig, TraceConfig, make_rng
from .engine import run_batch
from .parallel import map_batches

__all__ = ["martingale_ratio", "martingale_check", "MartingaleResult", "WRONG_END_LEVEL"]

#: stream key separating martingale batches from other uses of a seed
_STREAM = 4
#: M must have dropped below this value at a wrong termination
WRONG_END_LEVEL = 1e-2


def martingale_ratio(alpha: LinkPattern, state: ChainState) -> np.ndarray:
    """Z_alpha / Z_Ising at the images of a two-link chain state, per row."""
    if state.m != 4:
        raise ValueError("the martingale ratio is available for two links only")
    lay = layout(4, state.j)
    P = state.seg @ lay.pair_mat
    d = [P[:, lay.pair_col(a, b)] for a, b in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))]
    lz = [log_pure_n2_diffs(k, *d) for k in range(2)]
    k = N2_PATTERNS.index(alpha)
    return np.exp(lz[k] - np.logaddexp(lz[0], lz[1]))


@dataclass
class MartingaleResult:
    """Samples of M at the checkpoints and at the stop.

    Attributes
    ----------
    checkpoints : ndarray (C,)
    M0 : float
    M : ndarray (n, C)
        M at every checkpoint (chains stopped earlier hold their final value).
    M_stop : ndarray (n,)
    terminal : ndarray of int (n,)
        Terminal index, 0 when unresolved.
    partner : int
        Index linked to j in alpha.
    """

    alpha: LinkPattern
    x: tuple
    j: int
    checkpoints: np.ndarray
    M0: float
    M: np.ndarray
    M_stop: np.ndarray
    terminal: np.ndarray
    partner: int
    elapsed: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.M.shape[0]

    def means(self) -> np.ndarray:
        return self.M.mean(axis=0)

    def stderr(self) -> np.ndarray:
        n = self.n_samples
        return self.M.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(self.M.shape[1], np.inf)

    def wrong_end(self) -> np.ndarray:
        """Mask of resolved runs ending away from the partner of j."""
        return (self.terminal > 0) & (self.terminal != self.partner)

    def report(self, config_id: str = "martingale", n_se: float = 3.0) -> Report:
        rep = Report()
        N = len(self.x) // 2
        name = str(self.alpha)
        for c, mu, se in zip(self.checkpoints, self.means(), self.stderr()):
            dev = abs(mu - self.M0)
            # a zero standard error (t = 0) still allows rounding differences
            tol = max(n_se * se, 1e-12)
            rep.add(CheckRow(config_id, N, f"mean_M[{name}]@t={c:g}", float(mu), self.M0,
                             float(tol - dev), bool(dev <= tol)))
        wrong = self.wrong_end()
        worst = float(self.M_stop[wrong].max()) if wrong.any() else 0.0
        rep.add(CheckRow(config_id, N, f"max_M_wrong_end[{name}]", worst, WRONG_END_LEVEL,
                         WRONG_END_LEVEL - worst, worst < WRONG_END_LEVEL))
        unres = float(np.mean(self.terminal == 0))
        rep.add(CheckRow(config_id, N, "unresolved_fraction", unres, 0.01, 0.01 - unres, unres <= 0.01))
        return rep

    def ok(self) -> bool:
        return self.report().ok


def _mart_batch(task):
    alpha, x, j, cps, params, cfg, seed, k, size = task
    drift = make_drift("ising_total", j, len(x), params)
    res = run_batch(np.tile(x, (size, 1)), j, drift, make_rng(seed, _STREAM, k), cfg,
                    kappa=params.kappa, checkpoints=cps)
    M = np.stack([martingale_ratio(alpha, s) for s in res.checkpoints], axis=1) if len(cps) else np.empty((size, 0))
    return M, martingale_ratio(alpha, res.final), res.final.terminal


def martingale_check(
    alpha: LinkPattern,
    x,
    j: int,
    checkpoints=(0.05, 0.1, 0.2),
    params: SleParams = ISING,
    cfg: TraceConfig | None = None,
    mc: McConfig | None = None,
) -> MartingaleResult:
    """Sample M_t along chains driven by the total Ising partition function.

    Examples
    --------
    >>> from multisle.combinat import LinkPattern
    >>> r = martingale_check(LinkPattern.parse("1-2,3-4"), (0.0, 2.0, 3.0, 6.0), 1,
    ...                      checkpoints=(0.0,), mc=McConfig(n_samples=4))
    >>> round(float(r.M[0, 0]), 12)
    0.5
    """
    x = x if isinstance(x, PointConfig) else PointConfig(x)
    if x.n != 2 or alpha.n_links != 2:
        raise ValueError("martingale_check needs two links")
    if not params.is_ising:
        raise ValueError("martingale_check needs kappa = 3")
    cfg = cfg or TraceConfig()
    mc = mc or McConfig()
    cps = np.sort(np.asarray(checkpoints, dtype=float))
    if np.any(cps < 0):
        raise ValueError("checkpoints must be non-negative")
    t0 = time.perf_counter()
    tasks = [(alpha, x.array, j, cps, params, cfg, mc.seed, k, size) for k, size in mc.batches()]
    parts = map_batches(_mart_batch, tasks, mc.jobs)
    M = np.concatenate([p[0] for p in parts])
    Ms = np.concatenate([p[1] for p in parts])
    term = np.concatenate([p[2] for p in parts])
    M0 = float(martingale_ratio(alpha, ChainState.start(x.array[None, :], j))[0])
    return MartingaleResult(alpha, tuple(x), j, cps, M0, M, Ms, term, alpha.partner(j),
                            elapsed=time.perf_counter() - t0,
                            meta={"seed": mc.seed, "batch_size": mc.batch_size})
