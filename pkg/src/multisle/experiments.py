"""Experiment runners behind the command line.

Every runner takes a validated configuration dictionary and an output
directory, appends check rows to a :class:`~multisle.report.Report` handed in
by the caller (so rows gathered before an error survive) and returns a
JSON-serialisable record of the results.  Runners never write timing
information into their outputs, which keeps reruns with the same seed
byte-identical.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Callable

import numpy as np

from .combinat import LinkPattern, double_factorial, enumerate_link_patterns
from .ising.continuum import continuum_ratio
from .ising.crossing import SamplerSettings, estimate_crossing_probs
from .ising.export import interfaces_to_svg, spins_to_pgm
from .ising.interface import TopologyError, trace_interfaces
from .ising.lattice import build_polygon
from .ising.sampler import BETA_C, sample_spins
from .loewner.cascade import CASCADE_ADAPT, cascade_z_pure
from .loewner.config import McConfig, TraceConfig, seed_sequence
from .loewner.martingale import martingale_check
from .loewner.terminal import terminal_probabilities
from .partfn import checks as _checks
from .partfn import pfaffian as _pf
from .partfn.bounds import log_b_total
from .partfn.functions import z_pure
from .partfn.types import PointConfig, SleParams
from .report import CheckRow, Report, fmt_float

__all__ = ["DEFAULTS", "RUNNERS", "defaults_for", "sub_seed"]

_LOEWNER = {
    "samples": 2000,
    "batch_size": 2000,
    "dt": None,
    "eps_stop": None,
    "dt_factor": 1e-4,
    "eps_factor": 1e-3,
    "adapt": 1e-3,
    "separation": 100.0,
    "weight_tol": 1e-3,
    "max_steps": 1_000_000,
    "scheme": "slit",
    "n_se": 3.0,
}

#: default configuration of every experiment (before the file and the flags)
DEFAULTS: dict[str, dict] = {
    "identities": {"N": [1, 2, 3, 4, 5], "n_configs": 300, "spread": 1.0, "tol": 1e-10,
                   "grad_tol": 1e-5, "cov_tol": 1e-12, "points": [], "worst_only": False},
    "bounds": {"N": [2, 3, 4, 5, 6], "n_configs": 300, "spread": 1.0, "tol": 1e-10,
               "p_values": [0.5, 1.0, 2.0], "points": [], "worst_only": False},
    "gff": {"N": [1, 2, 3, 4, 5, 6], "n_configs": 300, "spread": 1.0, "tol": 1e-12,
            "points": [], "worst_only": False},
    "asymptotics": {"n_values": [1, 2], "tails": [[], [1.0, 2.5], [1.0, 2.0, 4.0, 7.0]],
                    "separations": [1e-1, 1e-2, 1e-3, 1e-4], "final_tol": 1e-3},
    "terminal": {**_LOEWNER, "points": [[0.0, 2.0, 3.0, 6.0]], "j": 1, "tolerance": None},
    "cascade": {**_LOEWNER, "adapt": CASCADE_ADAPT, "points": [[0.0, 1.0, 2.0, 3.0], [0.0, 2.0, 3.0, 6.0]],
                "patterns": [], "kappa": 3.0},
    "martingale": {**_LOEWNER, "points": [[0.0, 2.0, 3.0, 6.0]], "j": 1,
                   "patterns": ["1-2,3-4", "1-4,2-3"], "checkpoints": [0.05, 0.1, 0.2]},
    "ising": {"L": [32], "marks": [0.0, 0.25, 0.5, 0.75], "samples": 2000, "batch_size": 2000,
              "algorithm": "wolff_frozen_boundary", "beta": BETA_C, "equilibration": None,
              "decorrelation": None, "tie_break": "left", "expected": "continuum",
              "tolerance": None, "n_se": 3.0, "pattern_rows": True, "final_tolerance": None,
              "trend": False, "pictures": True},
    "reproduce": {"profile": "full"},
}

#: keys common to every experiment
COMMON = {"seed": 0, "jobs": 1}


def defaults_for(kind: str) -> dict:
    """A fresh copy of the defaults of an experiment, common keys included."""
    return json.loads(json.dumps({"experiment": kind, **COMMON, **DEFAULTS[kind]}))


def sub_seed(seed: int, *key: int) -> int:
    """A 63-bit seed derived from ``seed`` and an integer key path."""
    return int(seed_sequence(seed, *key).generate_state(1, np.uint64)[0] >> np.uint64(1))


# ---------------------------------------------------------------- helpers


def _trace_config(cfg: dict) -> TraceConfig:
    return TraceConfig(dt=cfg["dt"], epsilon_stop=cfg["eps_stop"], max_steps=cfg["max_steps"],
                       dt_factor=cfg["dt_factor"], eps_factor=cfg["eps_factor"], adapt=cfg["adapt"],
                       separation=cfg["separation"], weight_tol=cfg["weight_tol"], scheme=cfg["scheme"])


def _mc(cfg: dict, n: int | None = None, key: int = 0) -> McConfig:
    return McConfig(n_samples=n or cfg["samples"], seed=sub_seed(cfg["seed"], key),
                    batch_size=cfg["batch_size"], jobs=cfg["jobs"])


def _points_by_n(points) -> dict[int, np.ndarray]:
    out: dict[int, list] = {}
    for p in points:
        pc = PointConfig(p)
        out.setdefault(pc.n, []).append(pc.array)
    return {n: np.array(v) for n, v in sorted(out.items())}


def _corpus(cfg: dict, salt: int) -> list[tuple[int, np.ndarray, list[str]]]:
    """Random configurations per N followed by the explicit ones."""
    out = []
    for n in cfg["N"]:
        if cfg["n_configs"] > 0:
            rng = np.random.Generator(np.random.Philox(seed_sequence(cfg["seed"], salt, n)))
            x = _checks.random_configs(rng, cfg["n_configs"], n, cfg["spread"])
            out.append((n, x, [f"N{n}-r{i}" for i in range(x.shape[0])]))
    for n, x in _points_by_n(cfg["points"]).items():
        out.append((n, x, [f"N{n}-p{i}" for i in range(x.shape[0])]))
    return out


def _config_id(x) -> str:
    return "x=(" + ",".join(format(float(v), "g") for v in x) + ")"


def _add(rep: Report, part: Report, worst_only: bool) -> None:
    rep.extend((_checks.worst_rows(part) if worst_only else part).rows)


# ---------------------------------------------------------------- runners


def run_identities(cfg: dict, out: Path, rep: Report) -> dict:
    """Pfaffian/Hafnian identity, elimination, gradient and covariance suites."""
    counts = {}
    for n, x, ids in _corpus(cfg, 101):
        rng = np.random.Generator(np.random.Philox(seed_sequence(cfg["seed"], 102, n)))
        part = _checks.identity_suite(x, ids=ids, tol=cfg["tol"], grad_tol=cfg["grad_tol"],
                                      cov_tol=cfg["cov_tol"], rng=rng)
        counts[str(n)] = counts.get(str(n), 0) + x.shape[0]
        _add(rep, part, cfg["worst_only"])
    return {"configs_per_N": counts}


def _absolute_bound_rows(x: np.ndarray, ids: list[str]) -> list[CheckRow]:
    """Bounds of Z_Ising with absolute margins, for explicitly listed points."""
    n = x.shape[1] // 2
    z = np.exp(_pf.log_ising_pfaffian(x))
    b = np.exp(log_b_total(x))
    lo = b / math.sqrt(math.factorial(n))
    hi = b * double_factorial(2 * n - 1)
    rows = []
    for i, cid in enumerate(ids):
        rows.append(CheckRow(cid, n, "ising_lower_abs", float(lo[i]), float(z[i]),
                             float(z[i] - lo[i]), bool(lo[i] <= z[i])))
        rows.append(CheckRow(cid, n, "ising_upper_abs", float(z[i]), float(hi[i]),
                             float(hi[i] - z[i]), bool(z[i] <= hi[i])))
    return rows


def run_bounds(cfg: dict, out: Path, rep: Report) -> dict:
    """Two-sided bounds of Z_Ising, B-sum bounds and the compare-B identity."""
    counts = {}
    for n, x, ids in _corpus(cfg, 201):
        part = _checks.bounds_suite(x, ids=ids, tol=cfg["tol"], ps=tuple(cfg["p_values"]))
        if ids[0].startswith(f"N{n}-p"):
            part.extend(_absolute_bound_rows(x, [_config_id(r) for r in x]))
        counts[str(n)] = counts.get(str(n), 0) + x.shape[0]
        _add(rep, part, cfg["worst_only"])
    return {"configs_per_N": counts}


def run_gff(cfg: dict, out: Path, rep: Report) -> dict:
    """Normalisation of the boundary connection probabilities."""
    counts = {}
    for n, x, ids in _corpus(cfg, 301):
        part = _checks.gff_suite(x, ids=ids, tol=cfg["tol"])
        counts[str(n)] = counts.get(str(n), 0) + x.shape[0]
        _add(rep, part, cfg["worst_only"])
    return {"configs_per_N": counts}


def run_asymptotics(cfg: dict, out: Path, rep: Report) -> dict:
    """Collapse of 2n points in front of fixed tails."""
    results = []
    for n in cfg["n_values"]:
        for t, tail in enumerate(cfg["tails"]):
            cid = f"n{n}-tail{t}"
            res = _checks.check_cascade_asymptotics(n, tail, separations=cfg["separations"],
                                                     final_tol=cfg["final_tol"], config_id=cid)
            rep.extend(res.rows)
            results.append({"config_id": cid, "n": n, "tail": [fmt_float(v) for v in tail],
                            "separations": [fmt_float(v) for v in res.separations],
                            "deviations": [fmt_float(v) for v in res.deviations]})
    return {"runs": results}


def run_terminal(cfg: dict, out: Path, rep: Report) -> dict:
    """Terminal law of the Ising-driven Loewner chain."""
    tc = _trace_config(cfg)
    results = []
    for i, x in enumerate(cfg["points"]):
        cid = _config_id(x)
        tr = terminal_probabilities(x, cfg["j"], cfg=tc, mc=_mc(cfg, key=i))
        rep.extend(tr.report(cid, cfg["n_se"]).rows)
        tol = cfg["tolerance"]
        if tol is not None and tr.expected:
            for k, p in sorted(tr.expected.items()):
                dev = abs(tr.freq.get(k, 0.0) - p)
                rep.add(CheckRow(cid, len(x) // 2, f"p_terminal_{k}_abs", tr.freq.get(k, 0.0), p,
                                 tol - dev, dev <= tol))
        d = tr.to_dict(include_samples=False)
        d.pop("elapsed_seconds", None)
        results.append(d)
        with open(out / f"terminal_samples_{i}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("sample", "terminal", "T", "final_min_gap"))
            for s, (k, T, g) in enumerate(zip(tr.terminal, tr.T, tr.final_min_gap)):
                w.writerow((s, int(k), fmt_float(T), fmt_float(g)))
    return {"runs": results}


def _patterns(cfg: dict, n: int) -> list[LinkPattern]:
    if cfg.get("patterns"):
        pats = [LinkPattern.parse(s) for s in cfg["patterns"]]
        return [a for a in pats if a.n_links == n]
    return enumerate_link_patterns(n)


def run_cascade(cfg: dict, out: Path, rep: Report) -> dict:
    """Cascade Monte Carlo estimates of pure partition functions."""
    tc = _trace_config(cfg)
    params = SleParams(cfg["kappa"])
    results = []
    key = 0
    for x in cfg["points"]:
        pc = PointConfig(x)
        cid = _config_id(x)
        for alpha in _patterns(cfg, pc.n):
            v = cascade_z_pure(alpha, pc, params, tc, _mc(cfg, key=key))
            key += 1
            det = v.details
            rec = {"x": [fmt_float(t) for t in x], "pattern": str(alpha), "estimate": fmt_float(v.value),
                   "stderr": fmt_float(v.stderr), "n_samples": v.n_samples,
                   "details": {k: (fmt_float(u) if isinstance(u, float) else
                                   [fmt_float(w) for w in u] if isinstance(u, list) else u)
                               for k, u in (det or {}).items()}}
            if pc.n == 2 and params.is_ising:
                exact = z_pure(alpha, pc).value
                rec["exact"] = fmt_float(exact)
                dev = abs(v.value - exact)
                bound = cfg["n_se"] * v.stderr
                rep.add(CheckRow(cid, pc.n, f"cascade[{alpha}]", v.value, exact, bound - dev, dev <= bound))
            if det:
                diff = abs(det["level_difference"])
                bound = cfg["n_se"] * det["combined_stderr"]
                rep.add(CheckRow(cid, pc.n, f"cascade_levels[{alpha}]", det["levels"][0], det["levels"][1],
                                 bound - diff, diff <= bound))
                unres = det["unresolved"] / max(v.n_samples, 1)
                rep.add(CheckRow(cid, pc.n, f"cascade_unresolved[{alpha}]", unres, 0.01, 0.01 - unres,
                                 unres <= 0.01))
            results.append(rec)
    return {"runs": results}


def run_martingale(cfg: dict, out: Path, rep: Report) -> dict:
    """Martingale property of Z_alpha / Z_Ising along the Ising chain."""
    tc = _trace_config(cfg)
    results = []
    key = 0
    for x in cfg["points"]:
        cid = _config_id(x)
        for alpha in _patterns(cfg, len(x) // 2):
            res = martingale_check(alpha, x, cfg["j"], cfg["checkpoints"], cfg=tc, mc=_mc(cfg, key=key))
            key += 1
            rep.extend(res.report(cid, cfg["n_se"]).rows)
            wrong = res.wrong_end()
            results.append({
                "x": [fmt_float(t) for t in x], "pattern": str(alpha), "M0": fmt_float(res.M0),
                "checkpoints": [fmt_float(c) for c in res.checkpoints],
                "means": [fmt_float(m) for m in res.means()],
                "stderr": [fmt_float(s) for s in res.stderr()],
                "wrong_end_runs": int(wrong.sum()),
                "max_M_wrong_end": fmt_float(float(res.M_stop[wrong].max()) if wrong.any() else 0.0),
            })
    return {"runs": results}


def run_ising(cfg: dict, out: Path, rep: Report) -> dict:
    """Crossing probabilities of Ising interfaces against continuum ratios."""
    settings = SamplerSettings(cfg["algorithm"], cfg["beta"], cfg["equilibration"],
                               cfg["decorrelation"], cfg["tie_break"])
    results = []
    devs = []
    n_links = len(cfg["marks"]) // 2
    for i, L in enumerate(cfg["L"]):
        poly = build_polygon(L, cfg["marks"])
        cid = f"L{L}"
        if cfg["expected"] == "continuum":
            expected = {a: continuum_ratio(poly, a) for a in enumerate_link_patterns(n_links)}
        else:
            expected = {LinkPattern.parse(k): float(v) for k, v in cfg["expected"].items()}
        hist = estimate_crossing_probs(poly, _mc(cfg, key=i), settings)
        if cfg["pattern_rows"]:
            rep.extend(hist.report(expected, cid, cfg["tolerance"], cfg["n_se"]).rows)
        hist.to_csv(out / f"ising_L{L}.csv")
        dev = max(abs(float(hist.freq[hist.index(a)]) - p) for a, p in expected.items())
        devs.append(dev)
        eq, de = settings.resolve(L)
        results.append({
            "L": L, "marks": list(poly.marks), "n_samples": hist.n_samples,
            "equilibration": eq, "decorrelation": de,
            "frequencies": {str(a): fmt_float(f) for a, f in zip(hist.patterns, hist.freq)},
            "stderr": {str(a): fmt_float(s) for a, s in zip(hist.patterns, hist.se)},
            "tau_int": {str(a): fmt_float(t) for a, t in zip(hist.patterns, hist.tau)},
            "expected": {str(a): fmt_float(p) for a, p in expected.items()},
            "max_deviation": fmt_float(dev),
        })
        if cfg["pictures"]:
            field = sample_spins(poly, cfg["beta"], None, cfg["algorithm"], sub_seed(cfg["seed"], 900, i))
            spins_to_pgm(field, out / f"ising_L{L}_spins.pgm")
            try:
                traces = trace_interfaces(field, cfg["tie_break"])
            except TopologyError:  # pragma: no cover - the picture is optional
                traces = []
            interfaces_to_svg(field, traces, out / f"ising_L{L}_interfaces.svg")
    if cfg["trend"] and len(devs) > 1:
        steps = [b - a for a, b in zip(devs[:-1], devs[1:])]
        worst = max(steps)
        rep.add(CheckRow("trend", n_links, "deviation_decreases", devs[0], devs[-1], -worst, worst < 0))
    if cfg["final_tolerance"] is not None:
        tol = cfg["final_tolerance"]
        rep.add(CheckRow(f"L{cfg['L'][-1]}", n_links, "final_deviation", devs[-1], tol,
                         tol - devs[-1], devs[-1] <= tol))
    return {"runs": results, "max_deviation_by_L": [fmt_float(d) for d in devs]}


RUNNERS: dict[str, Callable[[dict, Path, Report], dict]] = {
    "identities": run_identities,
    "bounds": run_bounds,
    "gff": run_gff,
    "asymptotics": run_asymptotics,
    "terminal": run_terminal,
    "cascade": run_cascade,
    "martingale": run_martingale,
    "ising": run_ising,
}
