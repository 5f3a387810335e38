"""Empirical crossing probabilities of Ising interfaces.

Every batch of :class:`~multisle.loewner.config.McConfig` runs one Markov
chain with its own random stream: a random start, ``equilibration`` sweeps,
then one sample after every ``decorrelation`` sweeps.  Consecutive samples of
a chain are correlated, so the reported standard errors are inflated by the
integrated autocorrelation time of the pattern indicators, estimated per
batch with a self-consistent window.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..combinat import LinkPattern, enumerate_link_patterns
from ..loewner.config import McConfig, make_rng
from ..loewner.parallel import map_batches
from ..report import CheckRow, Report, fmt_float
from .interface import connectivity, trace_interfaces
from .lattice import LatticePolygon
from .sampler import ALGORITHMS, BETA_C, random_interior, run_sweeps

__all__ = ["SamplerSettings", "CrossingHistogram", "estimate_crossing_probs",
           "integrated_autocorrelation", "ratio_deviation", "MAX_CROSSING_LINKS"]

#: practical cap on the number of interfaces
MAX_CROSSING_LINKS = 4
#: stream key separating crossing-probability chains from other uses of a seed
_STREAM = 20


@dataclass(frozen=True)
class SamplerSettings:
    """Markov chain settings.

    ``equilibration`` and ``decorrelation`` default to ``10 L^2`` and
    ``L^2`` sweeps for the heat bath and to ``10 L`` and 5 sweeps for the
    Wolff sampler.
    """

    algorithm: str = "wolff_frozen_boundary"
    beta: float = BETA_C
    equilibration: int | None = None
    decorrelation: int | None = None
    tie_break: str = "left"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.tie_break not in ("left", "right"):
            raise ValueError("tie_break must be 'left' or 'right'")

    def resolve(self, L: int) -> tuple[int, int]:
        if self.algorithm == "heatbath":
            eq, de = 10 * L * L, L * L
        else:
            eq, de = 10 * L, 5
        return (self.equilibration if self.equilibration is not None else eq,
                self.decorrelation if self.decorrelation is not None else de)


def integrated_autocorrelation(x: np.ndarray, c: float = 6.0) -> float:
    """Integrated autocorrelation time of a series (1/2 for independent samples).

    The sum of the normalised autocorrelations is cut at the first lag
    ``k >= c * tau(k)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return 0.5
    x = x - x.mean()
    v = float(np.dot(x, x)) / n
    if v == 0:
        return 0.5
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * v)
    tau = 0.5
    for k in range(1, n):
        tau += acf[k]
        if k >= c * tau:
            break
    return max(float(tau), 0.5)


@dataclass
class CrossingHistogram:
    """Distribution of the interface link pattern.

    Attributes
    ----------
    patterns : list of LinkPattern
        All patterns of the polygon's size, in enumeration order.
    counts : ndarray of int
    freq, se : ndarray
        Frequencies and standard errors corrected for autocorrelation.
    se_naive : ndarray
        Binomial standard errors.
    tau : ndarray
        Integrated autocorrelation time (in samples) per pattern, pooled
        over batches.
    """

    polygon: LatticePolygon
    patterns: list
    counts: np.ndarray
    freq: np.ndarray
    se: np.ndarray
    se_naive: np.ndarray
    tau: np.ndarray
    n_samples: int
    settings: SamplerSettings
    elapsed: float = 0.0
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict[str, float]:
        return {str(a): float(f) for a, f in zip(self.patterns, self.freq)}

    def index(self, alpha: LinkPattern) -> int:
        return self.patterns.index(alpha)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("pattern", "count", "freq", "se"))
        for a, c, f, s in zip(self.patterns, self.counts, self.freq, self.se):
            w.writerow((str(a), int(c), fmt_float(f), fmt_float(s)))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def report(self, expected: dict, config_id: str = "ising", tol: float | None = None,
               n_se: float = 3.0) -> Report:
        """Rows comparing frequencies with ``expected`` ({pattern: value}).

        A row passes when the deviation is within ``tol`` if given, else
        within ``n_se`` standard errors.
        """
        rep = Report()
        for alpha, p in expected.items():
            alpha = alpha if isinstance(alpha, LinkPattern) else LinkPattern.parse(alpha)
            k = self.index(alpha)
            dev = abs(float(self.freq[k]) - p)
            bound = tol if tol is not None else n_se * float(self.se[k])
            rep.add(CheckRow(config_id, self.polygon.n_links, f"freq[{alpha}]", float(self.freq[k]),
                             float(p), bound - dev, dev <= bound))
        return rep


def _crossing_batch(task):
    poly, settings, seed, k, size = task
    rng = make_rng(seed, _STREAM, k)
    eq, de = settings.resolve(poly.L)
    field_ = random_interior(poly, rng)
    run_sweeps(field_, settings.beta, eq, settings.algorithm, rng)
    pats = enumerate_link_patterns(poly.n_links)
    lookup = {a: i for i, a in enumerate(pats)}
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        run_sweeps(field_, settings.beta, de, settings.algorithm, rng)
        out[i] = lookup[connectivity(trace_interfaces(field_, settings.tie_break))]
    return out


def estimate_crossing_probs(
    poly: LatticePolygon,
    mc: McConfig | None = None,
    settings: SamplerSettings | None = None,
) -> CrossingHistogram:
    """Empirical distribution of the interface connectivity.

    Examples
    --------
    >>> from multisle.ising.lattice import build_polygon
    >>> h = estimate_crossing_probs(build_polygon(6, (0.0, 0.5)), McConfig(n_samples=3))
    >>> h.as_dict()
    {'1-2': 1.0}
    """
    mc = mc or McConfig()
    settings = settings or SamplerSettings()
    N = poly.n_links
    if N > MAX_CROSSING_LINKS:
        raise ValueError(f"crossing estimates are limited to {MAX_CROSSING_LINKS} interfaces")
    t0 = time.perf_counter()
    tasks = [(poly, settings, mc.seed, k, size) for k, size in mc.batches()]
    parts = map_batches(_crossing_batch, tasks, mc.jobs)
    pats = enumerate_link_patterns(N)
    idx = np.concatenate(parts)
    n = idx.size
    counts = np.bincount(idx, minlength=len(pats))
    freq = counts / n
    se_naive = np.sqrt(freq * (1 - freq) / n)
    tau = np.empty(len(pats))
    for a in range(len(pats)):
        w = np.array([p.size for p in parts], dtype=float)
        taus = np.array([integrated_autocorrelation(p == a) for p in parts])
        tau[a] = float(np.sum(w * taus) / w.sum())
    se = se_naive * np.sqrt(2.0 * tau)
    return CrossingHistogram(poly, pats, counts, freq, se, se_naive, tau, n, settings,
                             elapsed=time.perf_counter() - t0,
                             meta={"seed": mc.seed, "batch_size": mc.batch_size})


def ratio_deviation(hist: CrossingHistogram, expected: dict) -> float:
    """Largest |frequency - expected| over the given patterns."""
    return max(abs(float(hist.freq[hist.index(a if isinstance(a, LinkPattern) else LinkPattern.parse(a))]) - p)
               for a, p in expected.items())

