"""Acceptance suite: runs ``multisle reproduce`` and reports one line per criterion.

The full profile takes most of an hour on one core.  Set
``MULTISLE_ACCEPTANCE_PROFILE=quick`` for a smoke run at reduced sizes; the
quick profile is not acceptance evidence, and its statistical rows may fail.
"""
import csv
import json
import os
from pathlib import Path

import pytest

from multisle.reproduce import CRITERIA, run_reproduce

from .conftest import ACCEPTANCE_LINES

PROFILE = os.environ.get("MULTISLE_ACCEPTANCE_PROFILE", "full")
DESCRIPTIONS = {
    1: "Pf^2 = Hf to 1e-10, 1e4 configs per N <= 5",
    2: "Pfaffian elimination equals the signed pairing sum, N <= 6",
    3: "two-sided bounds on Z_Ising, zero violations, spot value 13/12",
    4: "B-sum inequality and compare-B identity",
    5: "collapse asymptotics decrease to below 1e-3",
    6: "boundary connection probabilities sum to one, spot values 3/4 and 1/4",
    7: "analytic gradient against central differences",
    8: "Loewner terminal law at N = 2",
    9: "martingale M_t at three checkpoints and on wrong-end paths",
    10: "cascade Monte Carlo against the ODE values",
    11: "Ising crossing frequencies against the continuum ratio",
    12: "two reproduce runs give identical numeric reports",
}


def _read_criteria(out: Path) -> dict[int, dict]:
    with open(out / "criteria.csv", newline="") as fh:
        return {int(r["criterion"]): r for r in csv.DictReader(fh)}


@pytest.fixture(scope="module")
def reproduced(tmp_path_factory):
    out = tmp_path_factory.mktemp("reproduce")
    code = run_reproduce(out, PROFILE, quiet=True)
    manifest = json.loads((out / "manifest.json").read_text())
    rows = _read_criteria(out)
    ACCEPTANCE_LINES.append(f"reproduce profile={PROFILE} exit={code} ({manifest['wall_clock_seconds']:.0f} s)")
    for c in manifest["criteria"]:
        status = "PASS" if c["passed"] else "FAIL"
        extra = "" if c["passed"] else f"; first failure: {c['first_failure'] or c['errors']}"
        ACCEPTANCE_LINES.append(f"[{status}] criterion {c['id']:2d} {DESCRIPTIONS[c['id']]} "
                                f"({c['checks_run']} checks, {c['seconds']:.0f} s of "
                                f"{c['budget_seconds']} s{extra})")
    return out, manifest, rows


def _numeric_outputs(out: Path) -> dict[str, bytes]:
    """Every CSV and per-experiment JSON file; the manifest holds timings and is skipped."""
    files = {}
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.suffix in (".csv", ".json") and p.name != "manifest.json":
            files[str(p.relative_to(out))] = p.read_bytes()
    return files


@pytest.fixture(scope="module")
def reproduced_twice(tmp_path_factory):
    runs = []
    for k in range(2):
        out = tmp_path_factory.mktemp(f"repeat{k}")
        run_reproduce(out, "quick", quiet=True)
        runs.append(_numeric_outputs(out))
    return runs


@pytest.mark.parametrize("crit", CRITERIA, ids=lambda c: f"c{c.id:02d}_{c.name}")
def test_criterion(crit, reproduced):
    _, manifest, rows = reproduced
    row = rows[crit.id]
    entry = next(c for c in manifest["criteria"] if c["id"] == crit.id)
    assert not entry["errors"], entry["errors"]
    assert int(row["checks_run"]) > 0
    assert row["pass"] == "1", entry["first_failure"]


def test_reproduce_twice_bit_identical(reproduced_twice):
    a, b = reproduced_twice
    assert a.keys() == b.keys()
    differing = [name for name in a if a[name] != b[name]]
    ACCEPTANCE_LINES.append(f"[{'PASS' if not differing else 'FAIL'}] criterion 12 repeat check: "
                            f"{len(a)} files compared across two quick reproduce runs, "
                            f"{len(differing)} differ")
    assert not differing, differing
