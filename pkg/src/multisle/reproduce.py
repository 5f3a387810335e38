"""The acceptance suite as a single pipeline.

Every criterion consists of one or more experiment runs (see
:mod:`multisle.experiments`) with pinned seeds derived from a master seed;
a criterion passes when all of its check rows pass.  The ``quick`` profile
shrinks the sample sizes for smoke runs and determinism checks; its
statistical rows are not acceptance evidence.

Outputs: one subdirectory per criterion with the experiment files,
``criteria.csv`` (one line per criterion, no timings) and ``manifest.json``
(package versions, seeds, wall-clock times and pass/fail per criterion).
"""
from __future__ import annotations

import csv
import filecmp
import json
import math
import platform
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Callable

from . import __version__
from .experiments import RUNNERS, defaults_for, sub_seed
from .partfn.functions import gff_prob, z_ising_pfaffian
from .report import CheckRow, Report

__all__ = ["CRITERIA", "Criterion", "run_criterion", "run_reproduce", "DEFAULT_MASTER_SEED"]

DEFAULT_MASTER_SEED = 0
SYMMETRIC_MARKS = [0.0, 0.25, 0.5, 0.75]
#: marks of the asymmetric N = 2 square, multiples of 1/16 so that they are
#: lattice positions for every L divisible by 4
ASYMMETRIC_MARKS = [0.0625, 0.1875, 0.5, 0.6875]


def _spot_bounds(cfg: dict, out: Path, rep: Report) -> dict:
    x = (0.0, 1.0, 2.0, 3.0)
    z = z_ising_pfaffian(x).value
    lo, hi = 4.0 / (3.0 * math.sqrt(2.0)), 4.0
    res = abs(z - 13.0 / 12.0) / (13.0 / 12.0)
    rep.add(CheckRow("x=(0,1,2,3)", 2, "z_ising_value", z, 13.0 / 12.0, 1e-12 - res, res <= 1e-12))
    rep.add(CheckRow("x=(0,1,2,3)", 2, "z_above_lower", z, lo, z - lo, z >= lo))
    rep.add(CheckRow("x=(0,1,2,3)", 2, "z_below_upper", z, hi, hi - z, z <= hi))
    return {"z": z, "lower": lo, "upper": hi}


def _spot_gff(cfg: dict, out: Path, rep: Report) -> dict:
    x = (0.0, 1.0, 2.0, 3.0)
    vals = {}
    for (a, b), p in {(1, 2): 0.75, (1, 4): 0.25}.items():
        v = gff_prob(a, b, x)
        res = abs(v - p)
        rep.add(CheckRow("x=(0,1,2,3)", 2, f"gff_P({a},{b})", v, p, 1e-12 - res, res <= 1e-12))
        vals[f"{a},{b}"] = v
    return vals


_LOCAL_RUNNERS: dict[str, Callable[[dict, Path, Report], dict]] = {
    "spot_bounds": _spot_bounds,
    "spot_gff": _spot_gff,
}


def _determinism(cfg: dict, out: Path, rep: Report) -> dict:
    """Run a small subset twice (with one and with two workers) and compare bytes."""
    from .cli import execute

    seed = cfg["seed"]
    subset = [
        ("identities", {"N": [1, 2, 3], "n_configs": 50}),
        ("terminal", {"points": [[0.0, 1.0, 2.0, 3.0]], "samples": 60, "batch_size": 30}),
        ("cascade", {"points": [[0.0, 1.0, 2.0, 3.0]], "patterns": ["1-2,3-4"], "samples": 40,
                     "batch_size": 20}),
        ("ising", {"L": [12], "marks": SYMMETRIC_MARKS, "samples": 200, "batch_size": 100}),
    ]
    files = []
    with tempfile.TemporaryDirectory() as tmp:
        roots = [Path(tmp) / "a", Path(tmp) / "b"]
        for r, jobs in zip(roots, (1, 2)):
            for kind, over in subset:
                c = defaults_for(kind)
                c.update(over, seed=seed, jobs=jobs)
                execute(kind, c, r / kind, quiet=True)
        for kind, _ in subset:
            for f in sorted((roots[0] / kind).iterdir()):
                other = roots[1] / kind / f.name
                same = other.exists() and filecmp.cmp(f, other, shallow=False)
                rep.add(CheckRow(f"{kind}/{f.name}", 0, "bit_identical", float(f.stat().st_size),
                                 float(other.stat().st_size) if other.exists() else math.nan,
                                 0.0 if same else -1.0, same))
                files.append(f"{kind}/{f.name}")
    return {"compared": files}


_LOCAL_RUNNERS["determinism"] = _determinism


@dataclass(frozen=True)
class Criterion:
    """An acceptance criterion: runs ``[(label, experiment, overrides)]`` per profile."""

    id: int
    name: str
    budget_seconds: float
    full: list
    quick: list
    notes: str = ""

    def runs(self, profile: str) -> list:
        return self.full if profile == "full" else self.quick


def _c(kind, **over):
    return (kind, kind, over)


def _l(label, kind, **over):
    return (label, kind, over)


CRITERIA: list[Criterion] = [
    Criterion(1, "hafnian_identity", 60,
              [_c("identities", N=[1, 2, 3, 4, 5], n_configs=10_000, worst_only=True)],
              [_c("identities", N=[1, 2, 3, 4, 5], n_configs=500, worst_only=True)]),
    Criterion(2, "pfaffian_elimination_vs_sum", 60,
              [_c("identities", N=[1, 2, 3, 4, 5, 6], n_configs=1000, worst_only=True)],
              [_c("identities", N=[1, 2, 3, 4, 5, 6], n_configs=50, worst_only=True)]),
    Criterion(3, "ising_bounds", 120,
              [_c("bounds", N=[2, 3, 4, 5, 6], n_configs=10_000, worst_only=True,
                  points=[[0.0, 1.0, 2.0, 3.0]]), _c("spot_bounds")],
              [_c("bounds", N=[2, 3, 4, 5, 6], n_configs=500, worst_only=True,
                  points=[[0.0, 1.0, 2.0, 3.0]]), _c("spot_bounds")]),
    Criterion(4, "b_sum_and_compare_b", 120,
              [_c("bounds", N=[2, 3, 4, 5, 6], n_configs=10_000, worst_only=True, p_values=[0.5, 1.0, 2.0])],
              [_c("bounds", N=[2, 3, 4, 5, 6], n_configs=500, worst_only=True, p_values=[0.5, 1.0, 2.0])]),
    Criterion(5, "cascade_asymptotics", 60,
              [_c("asymptotics", n_values=[1, 2], tails=[[], [1.0, 2.5], [1.0, 2.0, 4.0, 7.0],
                                                         [0.5, 3.0], [1.0, 1.5, 10.0, 11.0]])],
              [_c("asymptotics")]),
    Criterion(6, "gff_normalisation", 30,
              [_c("gff", N=[1, 2, 3, 4, 5, 6], n_configs=1000), _c("spot_gff")],
              [_c("gff", N=[1, 2, 3, 4, 5, 6], n_configs=100), _c("spot_gff")]),
    Criterion(7, "gradient_vs_finite_differences", 60,
              [_c("identities", N=[1, 2, 3, 4, 5], n_configs=1000, worst_only=True)],
              [_c("identities", N=[1, 2, 3, 4, 5], n_configs=100, worst_only=True)]),
    Criterion(8, "loewner_terminal_law", 600,
              [_l("terminal_symmetric", "terminal", points=[[0.0, 2.0, 3.0, 6.0]], samples=10_000,
                  tolerance=0.015),
               _l("terminal_ode_n2", "terminal", points=[[0.0, 1.0, 2.0, 3.0]], samples=10_000)],
              [_l("terminal_symmetric", "terminal", points=[[0.0, 2.0, 3.0, 6.0]], samples=500,
                  batch_size=500, tolerance=0.015),
               _l("terminal_ode_n2", "terminal", points=[[0.0, 1.0, 2.0, 3.0]], samples=500,
                  batch_size=500)]),
    Criterion(9, "martingale_property", 300,
              [_c("martingale", points=[[0.0, 2.0, 3.0, 6.0]], samples=4000)],
              [_c("martingale", points=[[0.0, 2.0, 3.0, 6.0]], samples=300, batch_size=300)]),
    Criterion(10, "cascade_monte_carlo", 600,
              [_c("cascade", points=[[0.0, 1.0, 2.0, 3.0], [0.0, 2.0, 3.0, 6.0]], samples=10_000)],
              [_c("cascade", points=[[0.0, 1.0, 2.0, 3.0], [0.0, 2.0, 3.0, 6.0]], samples=300,
                  batch_size=300)]),
    Criterion(11, "ising_end_to_end", 1800,
              [_l("ising_symmetric", "ising", L=[64], marks=SYMMETRIC_MARKS, samples=10_000,
                  tolerance=0.02),
               _l("ising_asymmetric", "ising", L=[32, 64, 128], marks=ASYMMETRIC_MARKS, samples=10_000,
                  pattern_rows=False, trend=True, final_tolerance=0.05)],
              [_l("ising_symmetric", "ising", L=[16], marks=SYMMETRIC_MARKS, samples=500,
                  batch_size=500, tolerance=0.02),
               _l("ising_asymmetric", "ising", L=[16, 32, 64], marks=ASYMMETRIC_MARKS, samples=500,
                  batch_size=500, pattern_rows=False, trend=True, final_tolerance=0.05)]),
    Criterion(12, "determinism", 300, [_c("determinism")], [_c("determinism")]),
]


@dataclass
class CriterionResult:
    criterion: Criterion
    seed: int
    report: Report
    seconds: float
    errors: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.report.ok and not self.errors and len(self.report.rows) > 0


def run_criterion(crit: Criterion, out: Path, profile: str = "full", master_seed: int = DEFAULT_MASTER_SEED,
                  jobs: int = 1, quiet: bool = True) -> CriterionResult:
    """Run every experiment of one criterion into ``out``."""
    from .cli import execute

    seed = sub_seed(master_seed, 1000 + crit.id)
    total = Report()
    errors = []
    t0 = time.perf_counter()
    for label, kind, over in crit.runs(profile):
        if kind in _LOCAL_RUNNERS:
            cfg = {"experiment": kind, "seed": seed, "jobs": jobs, **over}
            out.mkdir(parents=True, exist_ok=True)
            rep = Report()
            err = None
            try:
                res = _LOCAL_RUNNERS[kind](cfg, out, rep)
            except Exception as exc:  # pragma: no cover - reported below
                err, res = repr(exc), {}
            rep.to_csv(out / f"{label}.csv")
            (out / f"{label}.json").write_text(json.dumps(
                {"experiment": kind, "summary": rep.summary(), "error": err, "results": res},
                indent=1, sort_keys=True, default=float) + "\n")
        else:
            cfg = defaults_for(kind)
            cfg.update(over, seed=seed, jobs=jobs)
            rep, code = execute(kind, cfg, out, name=label, quiet=quiet)
            err = "error" if code == 2 else None
        if err:
            errors.append(f"{label}: {err}")
        total.extend(rep.rows)
    return CriterionResult(crit, seed, total, time.perf_counter() - t0, errors)


def _versions() -> dict:
    out = {"python": sys.version.split()[0], "multisle": __version__}
    for dist in ("artifact", "numpy", "scipy", "numba", "jsonschema"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:  # pragma: no cover
            out[dist] = None
    return out


def run_reproduce(out: Path, profile: str = "full", master_seed: int = DEFAULT_MASTER_SEED,
                  jobs: int = 1, quiet: bool = False, only: list[int] | None = None) -> int:
    """Run the acceptance suite; returns 0 when every criterion passed."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    results = []
    for crit in CRITERIA:
        if only and crit.id not in only:
            continue
        d = out / f"c{crit.id:02d}_{crit.name}"
        if d.exists():
            shutil.rmtree(d)
        r = run_criterion(crit, d, profile, master_seed, jobs, quiet=True)
        results.append(r)
        if not quiet:
            status = "PASS" if r.passed else "FAIL"
            print(f"[{status}] criterion {crit.id:2d} {crit.name}: {len(r.report.rows)} checks, "
                  f"{len(r.report.failures)} failed, {r.seconds:.1f} s", flush=True)
    with open(out / "criteria.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("criterion", "name", "pass", "checks_run", "failures"))
        for r in results:
            w.writerow((r.criterion.id, r.criterion.name, "1" if r.passed else "0",
                        len(r.report.rows), len(r.report.failures)))
    manifest = {
        "profile": profile,
        "master_seed": master_seed,
        "jobs": jobs,
        "started_utc": started,
        "wall_clock_seconds": round(time.perf_counter() - t0, 3),
        "versions": _versions(),
        "platform": platform.platform(),
        "criteria": [
            {
                "id": r.criterion.id,
                "name": r.criterion.name,
                "seed": r.seed,
                "passed": r.passed,
                "checks_run": len(r.report.rows),
                "failures": len(r.report.failures),
                "first_failure": (lambda f: None if f is None else
                                  f"{f.config_id} {f.check_name} margin={f.margin!r}")(r.report.first_failure()),
                "errors": r.errors,
                "seconds": round(r.seconds, 3),
                "budget_seconds": r.criterion.budget_seconds,
                "within_budget": r.seconds <= r.criterion.budget_seconds,
            }
            for r in results
        ],
        "passed": all(r.passed for r in results),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    if not quiet:
        print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed "
              f"({manifest['wall_clock_seconds']:.0f} s) -> {out}")
    return 0 if manifest["passed"] else 1
