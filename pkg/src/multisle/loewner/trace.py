r"""Sampling SLE traces with the zipper scheme.

The driving function is frozen on each step, so the Loewner flow over a
step of length dt with driving value U is the vertical-slit map

.. math::

    f(z) = U + \sqrt{(z - U)^2 + 4\,dt},

whose inverse is evaluated in the stable product form
``U + sqrt(w - U - 2 sqrt(dt)) * sqrt(w - U + 2 sqrt(dt))``.  The tip after
step k is f_1^{-1} o ... o f_k^{-1}(U_k).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from ..partfn.types import ISING, SleParams
from ..report import fmt_float
from .chain import make_drift
from .config import TraceConfig, make_rng
from .engine import run_batch

__all__ = ["DrivingPath", "SleTrace", "sample_sle_trace", "zipper_trace", "forward_map"]

#: stream key separating trace sampling from other uses of a seed
_STREAM = 2


@dataclass
class DrivingPath:
    """Piecewise-constant driving function.

    Attributes
    ----------
    t : ndarray (K+1,)
        Step boundaries, t[0] = 0.
    W : ndarray (K+1,)
        Driving value at the step boundaries; W[k] drives step k+1.
    """

    t: np.ndarray
    W: np.ndarray

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.t)

    @property
    def n_steps(self) -> int:
        return self.t.size - 1

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t", "W"))
        for a, b in zip(self.t, self.W):
            w.writerow((fmt_float(a), fmt_float(b)))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass
class SleTrace:
    """A sampled trace with its driving path.

    Attributes
    ----------
    path : DrivingPath
    z : ndarray of complex
        Polyline from the starting point through the tips at the output steps.
    steps : ndarray of int
        Step index of every polyline vertex (0 for the starting point).
    reached : bool
        For a boundary target, whether the stopping threshold was reached
        before ``max_steps``.
    """

    path: DrivingPath
    z: np.ndarray
    steps: np.ndarray
    reached: bool = True

    @property
    def endpoint(self) -> complex:
        return complex(self.z[-1])

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("re", "im"))
        for v in self.z:
            w.writerow((fmt_float(v.real), fmt_float(v.imag)))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@numba.njit(cache=True)
def _unzip(U, dt, steps, out):  # pragma: no cover - compiled
    for i in range(steps.size):
        s = steps[i]
        if s == 0:
            out[i] = U[0] + 0j
            continue
        z = U[s - 1] + 0j
        for k in range(s - 1, -1, -1):
            r = 2.0 * math.sqrt(dt[k])
            w = z - U[k]
            z = U[k] + np.sqrt(w - r) * np.sqrt(w + r)
        out[i] = z


def zipper_trace(path: DrivingPath, n_out: int | None = 2000) -> tuple[np.ndarray, np.ndarray]:
    """Tips of the curve at up to ``n_out`` evenly spaced steps (and the last).

    Cost is O(n_out * K) for K steps.
    """
    K = path.n_steps
    if n_out is None or K <= n_out:
        steps = np.arange(K + 1)
    else:
        steps = np.unique(np.linspace(0, K, n_out + 1).round().astype(np.int64))
    out = np.empty(steps.size, dtype=np.complex128)
    _unzip(np.ascontiguousarray(path.W[:-1] if K else path.W, dtype=float),
           np.ascontiguousarray(path.dt, dtype=float), steps.astype(np.int64), out)
    return out, steps


def forward_map(path: DrivingPath, z) -> np.ndarray:
    """g_t(z) at the final time, composing the slit maps forwards."""
    z = np.asarray(z, dtype=complex).copy()
    for U, d in zip(path.W[:-1], path.dt):
        w = z - U
        r = np.sqrt(w * w + 4.0 * d)
        # choose the branch asymptotic to w at infinity
        r = np.where((r * np.conj(w)).real < 0, -r, r)
        z = U + r
    return z


def sample_sle_trace(
    x_a: float,
    x_b: float = math.inf,
    params: SleParams = ISING,
    cfg: TraceConfig | None = None,
    *,
    t_max: float = 1.0,
    increments=None,
    n_out: int | None = 2000,
) -> SleTrace:
    """Sample a chordal SLE trace from x_a to x_b (or to infinity).

    Parameters
    ----------
    x_b : float
        Target point, ``inf`` for the chordal SLE towards infinity.
    t_max : float
        Total capacity for the target at infinity.
    increments : array_like, optional
        Brownian increments dB (target at infinity only).  The step length
        is then ``cfg.dt`` or ``t_max / len(increments)``.
    n_out : int or None
        Number of polyline vertices (all steps if None).

    Examples
    --------
    >>> tr = sample_sle_trace(0.0, increments=np.zeros(4), t_max=1.0)
    >>> abs(tr.endpoint - 2j) < 1e-12
    True
    """
    cfg = cfg or TraceConfig()
    kappa = params.kappa
    if not 0 < kappa <= 4:
        raise ValueError("traces are simple only for kappa in (0, 4]")
    if math.isinf(x_b):
        if increments is not None:
            dB = np.asarray(increments, dtype=float)
            dt = cfg.dt if cfg.dt is not None else t_max / dB.size
        else:
            dt = cfg.dt if cfg.dt is not None else cfg.dt_factor * t_max
            K = int(math.ceil(t_max / dt - 1e-9))
            dB = math.sqrt(dt) * make_rng(cfg.seed, _STREAM).standard_normal(K)
        t = dt * np.arange(dB.size + 1)
        W = x_a + np.concatenate([[0.0], np.cumsum(math.sqrt(kappa) * dB)])
        path = DrivingPath(t, W)
        z, steps = zipper_trace(path, n_out)
        return SleTrace(path, z, steps, True)
    if increments is not None:
        raise ValueError("explicit increments are supported for the target at infinity only")
    if x_a == x_b:
        raise ValueError("start and target coincide")
    x = np.array(sorted((x_a, x_b)))
    j = 1 if x_a < x_b else 2
    drift = make_drift("pair", j, 2, params, target=3 - j)
    res = run_batch(x[None, :], j, drift, make_rng(cfg.seed, _STREAM), cfg, kappa=kappa,
                    stop=("target", 3 - j, None), record_path=True)
    rec = res.path
    t = np.concatenate([[0.0], rec[:, 0]])
    W = np.concatenate([[x_a], rec[:, 1]])
    path = DrivingPath(t, W)
    z, steps = zipper_trace(path, n_out)
    return SleTrace(path, z, steps, bool(res.resolved[0]))
