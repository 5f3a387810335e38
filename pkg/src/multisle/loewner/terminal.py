"""Where does the Ising interface started at x_j end?

A chain driven by the total Ising partition function terminates at one of
the marked points of opposite parity.  :func:`terminal_probabilities`
estimates the law of the terminal index by Monte Carlo and compares it, for
two links, with the exact law

.. math::

    P[\\text{end at } x_k] = \\frac{\\sum_{\\alpha \\ni \\{j,k\\}} Z_\\alpha(x)}{Z_{\\mathrm{Ising}}(x)} .
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..combinat import LinkPattern
from ..partfn.functions import N2_PATTERNS, z_ising_pfaffian, z_pure
from ..partfn.types import ISING, PointConfig, SleParams
from ..report import CheckRow, Report, fmt_float
from .chain import ChainState, Drift, make_drift
from .config import McConfig, TraceConfig, make_rng
from .engine import run_batch
from .parallel import map_batches

__all__ = [
    "drift_for",
    "run_to_swallow",
    "TerminalReport",
    "terminal_probabilities",
    "exact_terminal_law",
    "opposite_parity",
]

#: stream key separating terminal-law batches from other uses of a seed
_STREAM = 1


def opposite_parity(j: int, m: int) -> list[int]:
    """Indices of parity opposite to j among 1..m."""
    return [k for k in range(1, m + 1) if (k - j) % 2]


def drift_for(z_kind, j: int, m: int, params: SleParams = ISING, target: int | None = None) -> Drift:
    """Drift for ``z_kind`` in {"ising_total", "pair"} or a LinkPattern (pure)."""
    if isinstance(z_kind, LinkPattern):
        return make_drift("pure", j, m, params, alpha=z_kind)
    return make_drift(str(z_kind), j, m, params, target=target)


def _pc(x) -> PointConfig:
    return x if isinstance(x, PointConfig) else PointConfig(x)


def run_to_swallow(
    x,
    j: int,
    z_kind="ising_total",
    params: SleParams = ISING,
    cfg: TraceConfig | None = None,
    *,
    target: int | None = None,
) -> tuple[ChainState, int | None]:
    """Run one chain from x_j until a marked point is swallowed.

    Returns
    -------
    state : ChainState
        Single-row state at the stop.
    terminal : int or None
        Terminal index (1-based), ``None`` if ``max_steps`` was reached.

    Examples
    --------
    >>> _, k = run_to_swallow((0.0, 1.0), 1)
    >>> k
    2
    """
    x = _pc(x)
    cfg = cfg or TraceConfig()
    drift = drift_for(z_kind, j, len(x), params, target)
    res = run_batch(x.array[None, :], j, drift, make_rng(cfg.seed, _STREAM), cfg, kappa=params.kappa)
    k = int(res.final.terminal[0])
    return res.final, (k if res.resolved[0] else None)


def exact_terminal_law(x, j: int) -> dict[int, float]:
    """Exact terminal probabilities at kappa = 3 for N = 1 or 2."""
    x = _pc(x)
    if x.n == 1:
        return {3 - j: 1.0}
    if x.n != 2:
        raise ValueError("exact terminal law available for N <= 2")
    ztot = z_ising_pfaffian(x).value
    out = {k: 0.0 for k in opposite_parity(j, 4)}
    for alpha in N2_PATTERNS:
        out[alpha.partner(j)] += z_pure(alpha, x).value / ztot
    return out


@dataclass
class TerminalReport:
    """Empirical terminal law of chains started at x_j.

    Attributes
    ----------
    freq, stderr : dict
        Frequency and binomial standard error per index of opposite parity.
    unresolved : float
        Fraction of runs that reached ``max_steps``.
    wrong_parity : int
        Resolved runs that ended at an index of the same parity as j.
    terminal, T, final_min_gap : ndarray
        Per-sample terminal index (0 if unresolved), stopping time and
        distance from W to the nearest image at the stop.
    expected : dict or None
        Exact law when available.
    """

    x: tuple
    j: int
    n_samples: int
    freq: dict
    stderr: dict
    unresolved: float
    wrong_parity: int
    terminal: np.ndarray
    T: np.ndarray
    final_min_gap: np.ndarray
    steps: np.ndarray
    expected: dict | None = None
    elapsed: float = 0.0
    max_unresolved: float = 0.01
    meta: dict = field(default_factory=dict)

    def z_scores(self) -> dict[int, float]:
        if not self.expected:
            return {}
        out = {}
        for k, p in self.expected.items():
            se = math.sqrt(max(p * (1 - p), 1e-300) / self.n_samples)
            out[k] = (self.freq.get(k, 0.0) - p) / se
        return out

    def report(self, config_id: str = "terminal", n_se: float = 3.0) -> Report:
        """Check rows: parity law, unresolved budget and agreement with the exact law."""
        rep = Report()
        N = len(self.x) // 2
        rep.add(CheckRow(config_id, N, "wrong_parity", float(self.wrong_parity), 0.0,
                         -float(self.wrong_parity), self.wrong_parity == 0))
        rep.add(CheckRow(config_id, N, "unresolved_fraction", self.unresolved, self.max_unresolved,
                         self.max_unresolved - self.unresolved, self.unresolved <= self.max_unresolved))
        if self.expected:
            for k, p in sorted(self.expected.items()):
                # the standard error of the estimator under the exact law
                se = math.sqrt(max(p * (1 - p), 1e-300) / self.n_samples)
                dev = abs(self.freq.get(k, 0.0) - p)
                rep.add(CheckRow(config_id, N, f"p_terminal_{k}", self.freq.get(k, 0.0), p,
                                 n_se * se - dev, dev <= n_se * se))
        return rep

    def ok(self) -> bool:
        return self.report().ok

    def to_dict(self, include_samples: bool = True) -> dict:
        d = {
            "x": [fmt_float(v) for v in self.x],
            "j": self.j,
            "n_samples": self.n_samples,
            "frequencies": {str(k): fmt_float(v) for k, v in sorted(self.freq.items())},
            "stderr": {str(k): fmt_float(v) for k, v in sorted(self.stderr.items())},
            "unresolved": fmt_float(self.unresolved),
            "wrong_parity": self.wrong_parity,
            "expected": (
                {str(k): fmt_float(v) for k, v in sorted(self.expected.items())}
                if self.expected else None
            ),
            "elapsed_seconds": round(self.elapsed, 3),
            **self.meta,
        }
        if include_samples:
            d["samples"] = {
                "terminal": [int(v) for v in self.terminal],
                "T": [fmt_float(v) for v in self.T],
                "final_min_gap": [fmt_float(v) for v in self.final_min_gap],
            }
        return d

    def to_json(self, path: str | Path | None = None, include_samples: bool = True) -> str:
        text = json.dumps(self.to_dict(include_samples), indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def _terminal_batch(task):
    x, j, params, cfg, seed, k, size = task
    drift = drift_for("ising_total", j, len(x), params)
    res = run_batch(np.tile(x, (size, 1)), j, drift, make_rng(seed, _STREAM, k), cfg, kappa=params.kappa)
    return res.final.terminal, res.final.T, res.final_min_gap, res.steps


def terminal_probabilities(
    x,
    j: int,
    params: SleParams = ISING,
    cfg: TraceConfig | None = None,
    mc: McConfig | None = None,
) -> TerminalReport:
    """Monte Carlo terminal law of the Ising-driven chain from x_j.

    Runs that hit ``max_steps`` stay in the sample as unresolved; they are
    never redrawn.

    Examples
    --------
    >>> rep = terminal_probabilities((0.0, 1.0), 1, mc=McConfig(n_samples=5))
    >>> rep.freq
    {2: 1.0}
    """
    x = _pc(x)
    if not params.is_ising:
        raise ValueError("terminal probabilities are defined for the Ising chain, kappa = 3")
    if not 1 <= j <= len(x):
        raise IndexError(f"growing index {j} out of range")
    cfg = cfg or TraceConfig()
    mc = mc or McConfig()
    t0 = time.perf_counter()
    tasks = [(x.array, j, params, cfg, mc.seed, k, size) for k, size in mc.batches()]
    parts = map_batches(_terminal_batch, tasks, mc.jobs)
    term = np.concatenate([p[0] for p in parts])
    T = np.concatenate([p[1] for p in parts])
    gap = np.concatenate([p[2] for p in parts])
    steps = np.concatenate([p[3] for p in parts])
    n = term.size
    cands = opposite_parity(j, len(x))
    freq = {k: float(np.mean(term == k)) for k in cands}
    se = {k: math.sqrt(p * (1 - p) / n) for k, p in freq.items()}
    wrong = int(np.sum((term > 0) & ((term - j) % 2 == 0)))
    expected = exact_terminal_law(x, j) if x.n <= 2 else None
    return TerminalReport(
        x=tuple(x), j=j, n_samples=n, freq=freq, stderr=se,
        unresolved=float(np.mean(term == 0)), wrong_parity=wrong,
        terminal=term, T=T, final_min_gap=gap, steps=steps, expected=expected,
        elapsed=time.perf_counter() - t0,
        meta={"seed": mc.seed, "batch_size": mc.batch_size},
    )
