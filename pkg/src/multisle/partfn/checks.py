"""Vectorised verification suites for identities, bounds and asymptotics.

Every suite takes a batch of configurations ``x`` of shape (M, 2N) and
returns a :class:`~multisle.report.Report`.  Inequality rows carry the
relative slack ``1 - lhs/rhs`` as margin (a row passes when the slack is
above ``-ineq_tol``, which only absorbs round-off at equality cases);
identity rows carry ``tol - residual``.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from ..combinat import double_factorial
from ..report import CheckRow, Report
from . import bounds as _b
from . import pfaffian as _pf

__all__ = [
    "random_configs",
    "identity_suite",
    "bounds_suite",
    "gff_suite",
    "check_bounds",
    "check_cascade_asymptotics",
    "AsymptoticsResult",
    "worst_rows",
]

INEQ_TOL = 1e-12


def random_configs(rng: np.random.Generator, m: int, n: int, spread: float = 1.0) -> np.ndarray:
    """Random increasing configurations with log-normal gaps.

    Gaps span several orders of magnitude so that near-collisions and
    widely separated clusters both occur.
    """
    gaps = np.exp(spread * rng.standard_normal((m, 2 * n)))
    x = np.cumsum(gaps, axis=1)
    x -= x[:, :1] * rng.uniform(0.0, 2.0, size=(m, 1))
    return x


def _ids(prefix: str, m: int, ids=None) -> list[str]:
    return list(ids) if ids is not None else [f"{prefix}{i}" for i in range(m)]


def _rows(ids, n, name, lhs, rhs, margin, passed) -> list[CheckRow]:
    return [
        CheckRow(ids[i], n, name, float(lhs[i]), float(rhs[i]), float(margin[i]), bool(passed[i]))
        for i in range(len(ids))
    ]


def _ineq(ids, n, name, log_lhs, log_rhs, tol=INEQ_TOL):
    slack = -np.expm1(log_lhs - log_rhs)
    return _rows(ids, n, name, np.exp(log_lhs), np.exp(log_rhs), slack, slack >= -tol)


def _ident(ids, n, name, lhs, rhs, tol):
    res = np.abs(lhs - rhs) / np.abs(rhs)
    return _rows(ids, n, name, lhs, rhs, tol - res, res <= tol)


def identity_suite(
    x: np.ndarray,
    ids=None,
    tol: float = 1e-10,
    grad_tol: float = 1e-5,
    cov_tol: float = 1e-12,
    rng: np.random.Generator | None = None,
) -> Report:
    """Pf^2 = Hf, pairing sum = elimination, gradient vs finite differences,
    scaling covariance and translation invariance."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, n = x.shape[0], x.shape[1] // 2
    ids = _ids(f"N{n}-", m, ids)
    rng = rng or np.random.default_rng(0)
    rep = Report()

    psum = _pf.ising_sum(x)
    lpf = _pf.log_ising_pfaffian(x)
    pf = np.exp(lpf)
    hf = _pf.hafnian_sum_array(x)
    rep.extend(_ident(ids, n, "pf2_eq_hf", psum * psum, hf, tol))
    rep.extend(_ident(ids, n, "pfsum_eq_elim", pf, psum, tol))

    # gradient: central differences of log pf with step 1e-6 * min gap,
    # error measured against the largest gradient component
    g = _pf.grad_log_ising(x)
    step = 1e-6 * np.min(np.diff(x, axis=1), axis=1)
    fd = np.empty_like(g)
    for j in range(2 * n):
        e = np.zeros_like(x)
        e[:, j] = step
        fd[:, j] = (_pf.log_ising_pfaffian(x + e) - _pf.log_ising_pfaffian(x - e)) / (2 * step)
    scale = np.max(np.abs(g), axis=1)
    err = np.max(np.abs(fd - g), axis=1) / scale
    worst = np.argmax(np.abs(fd - g), axis=1)
    rows = np.arange(m)
    rep.extend(_rows(ids, n, "grad_vs_fd", g[rows, worst], fd[rows, worst], grad_tol - err, err <= grad_tol))

    lam = np.exp(rng.uniform(-2.0, 2.0, size=m))
    c = rng.uniform(-10.0, 10.0, size=m)
    lpf_s = _pf.log_ising_pfaffian(lam[:, None] * x)
    rep.extend(_ident(ids, n, "ising_scaling", np.exp(lpf_s), np.exp(lpf - n * np.log(lam)), cov_tol))
    lpf_t = _pf.log_ising_pfaffian(x + c[:, None])
    rep.extend(_ident(ids, n, "ising_translation", np.exp(lpf_t), pf, cov_tol))
    lb = _b.log_b_total(x)
    rep.extend(_ident(ids, n, "btotal_scaling", np.exp(_b.log_b_total(lam[:, None] * x)),
                      np.exp(lb - n * np.log(lam)), cov_tol))
    rep.extend(_ident(ids, n, "btotal_translation", np.exp(_b.log_b_total(x + c[:, None])),
                      np.exp(lb), cov_tol))
    rep.extend(_ident(ids, n, "hafnian_translation", _pf.hafnian_sum_array(x + c[:, None]), hf, cov_tol))
    return rep


def bounds_suite(x: np.ndarray, ids=None, tol: float = 1e-10, ps=(0.5, 1.0, 2.0)) -> Report:
    """Two-sided Pfaffian bounds, B-sum bounds, compare-B identity and the
    cross-ratio inequality."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, n = x.shape[0], x.shape[1] // 2
    ids = _ids(f"N{n}-", m, ids)
    rep = Report()
    lz = _pf.log_ising_pfaffian(x)
    lb = _b.log_b_total(x)
    df = double_factorial(2 * n - 1)
    rep.extend(_ineq(ids, n, "ising_lower", lb - 0.5 * math.lgamma(n + 1), lz))
    rep.extend(_ineq(ids, n, "ising_upper", lz, lb + math.log(df)))

    lba = _b.log_b_alpha_all(x) - lb[:, None]
    for p in ps:
        ls = np.log(np.exp(p * lba).sum(axis=1))
        rep.extend(_ineq(ids, n, f"bsum_lower_p{p:g}", np.full(m, -p * math.log(df)), ls))
        rep.extend(_ineq(ids, n, f"bsum_upper_p{p:g}", ls, np.full(m, math.log(df))))

    if n >= 1:
        worst_res = np.zeros(m)
        worst_l = np.zeros(m)
        worst_r = np.zeros(m)
        for j in range(1, 2 * n):
            lhs, rhs = _b.compare_b_sides(j, x)
            res = np.abs(np.expm1(lhs - rhs))
            upd = res >= worst_res
            worst_res = np.where(upd, res, worst_res)
            worst_l = np.where(upd, lhs, worst_l)
            worst_r = np.where(upd, rhs, worst_r)
        rep.extend(_rows(ids, n, "compare_b_identity", np.exp(worst_l), np.exp(worst_r),
                         tol - worst_res, worst_res <= tol))
    if n >= 2:
        head = _b.log_b_total(x) - _b.log_b_total(x[:, : 2 * n - 2])
        x2n, x2n1, x2n2 = x[:, -1], x[:, -2], x[:, -3]
        rhs = np.log(x2n - x2n2) - np.log(x2n - x2n1) - np.log(x2n1 - x2n2)
        rep.extend(_ineq(ids, n, "compare_b_last_pair", head, rhs))

        worst = np.full(m, -np.inf)
        for i1, i2, i3, i4 in itertools.combinations(range(2 * n), 4):
            a, b, c, d = x[:, i1], x[:, i2], x[:, i3], x[:, i4]
            cr = np.log(d - a) + np.log(c - b) - np.log(c - a) - np.log(d - b)
            worst = np.maximum(worst, cr)
        rep.extend(_ineq(ids, n, "cross_ratio_le_1", worst, np.zeros(m)))
    return rep


def gff_suite(x: np.ndarray, ids=None, tol: float = 1e-12) -> Report:
    """For every odd a: sum over even b of P^(a,b) equals one."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, n = x.shape[0], x.shape[1] // 2
    ids = _ids(f"N{n}-", m, ids)
    rep = Report()
    for a in range(1, 2 * n, 2):
        tot = sum(np.exp(_b.log_gff_prob(a, b, x)) for b in range(2, 2 * n + 1, 2))
        res = np.abs(tot - 1.0)
        rep.extend(_rows(ids, n, f"gff_sum_a{a}", tot, np.ones(m), tol - res, res <= tol))
    return rep


def check_bounds(x) -> Report:
    """Bounds suite on a single configuration (see :func:`bounds_suite`)."""
    arr = np.asarray(getattr(x, "points", x), dtype=float)
    return bounds_suite(arr[None, :], ids=["x"])


class AsymptoticsResult(Report):
    """Report with the raw deviation sequence attached."""

    def __init__(self, rows, separations, ratios, targets, deviations):
        super().__init__(list(rows))
        self.separations = np.asarray(separations)
        self.ratios = np.asarray(ratios)
        self.targets = np.asarray(targets)
        self.deviations = np.asarray(deviations)


def check_cascade_asymptotics(
    n: int,
    x_tail,
    collapse_point: float = 0.0,
    separations=(1e-1, 1e-2, 1e-3, 1e-4),
    final_tol: float = 1e-3,
    jitter: float = 0.05,
    config_id: str = "asy",
) -> AsymptoticsResult:
    """Collapse 2n points at ``collapse_point`` in front of a fixed tail.

    For each separation s the block is ``linspace(c, c + s, 2n)``.  The
    ratio Z^(N)(block, tail) / Z^(n)(block) is compared with Z^(N-n)(tail).
    Rows report each deviation, whether the sequence decreases (allowing a
    relative jitter and a round-off floor), and whether the last deviation
    is below ``final_tol``.
    """
    tail = np.asarray(getattr(x_tail, "points", x_tail), dtype=float).reshape(-1)
    seps = np.asarray(separations, dtype=float)
    if n < 1:
        raise ValueError("n must be positive")
    if tail.size % 2:
        raise ValueError("tail must have an even number of points")
    if np.any(np.diff(tail) <= 0):
        raise ValueError("tail must be strictly increasing")
    if np.any(np.diff(seps) >= 0) or np.any(seps <= 0):
        raise ValueError("separations must be positive and decreasing")
    if tail.size and collapse_point + seps.max() >= tail[0]:
        raise ValueError("collapsing block overlaps the tail")
    n_tot = n + tail.size // 2
    blocks = collapse_point + seps[:, None] * np.linspace(0.0, 1.0, 2 * n)[None, :]
    full = np.concatenate([blocks, np.broadcast_to(tail, (seps.size, tail.size))], axis=1)
    log_ratio = _pf.log_ising_pfaffian(full) - _pf.log_ising_pfaffian(blocks)
    log_target = float(_pf.log_ising_pfaffian(tail)) if tail.size else 0.0
    dev = np.abs(np.expm1(log_ratio - log_target))
    ratios = np.exp(log_ratio)
    target = math.exp(log_target)
    rows = [
        CheckRow(config_id, n_tot, f"asy_dev_s{s:.0e}", float(r), target, float(-d), True)
        for s, r, d in zip(seps, ratios, dev)
    ]
    floor = 1e-12
    steps = dev[1:] <= (1.0 + jitter) * dev[:-1] + floor
    mono_margin = float(np.min((1.0 + jitter) * dev[:-1] + floor - dev[1:])) if dev.size > 1 else 0.0
    rows.append(CheckRow(config_id, n_tot, "asy_monotone", float(dev[0]), float(dev[-1]),
                         mono_margin, bool(np.all(steps))))
    rows.append(CheckRow(config_id, n_tot, "asy_final", float(dev[-1]), final_tol,
                         final_tol - float(dev[-1]), bool(dev[-1] < final_tol)))
    return AsymptoticsResult(rows, seps, ratios, np.full(seps.size, target), dev)


def worst_rows(rep: Report) -> Report:
    """Collapse a report to one row per (N, check_name): the smallest margin."""
    best: dict[tuple[int, str], CheckRow] = {}
    counts: dict[tuple[int, str], int] = {}
    ok: dict[tuple[int, str], bool] = {}
    for r in rep.rows:
        key = (r.N, r.check_name)
        counts[key] = counts.get(key, 0) + 1
        ok[key] = ok.get(key, True) and r.passed
        cur = best.get(key)
        if cur is None or (r.passed, r.margin) < (cur.passed, cur.margin):
            best[key] = r
    out = Report()
    for key in sorted(best):
        r = best[key]
        out.add(CheckRow(f"{r.config_id} (worst of {counts[key]})", r.N, r.check_name,
                         r.lhs, r.rhs, r.margin, ok[key]))
    return out
