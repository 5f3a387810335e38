"""Check reports shared by the property suites and the command line.

A report is a list of :class:`CheckRow`.  Rows serialise to CSV with the
columns ``config_id, N, check_name, lhs, rhs, margin, pass`` and the report
as a whole to a JSON summary ``{"checks_run": ..., "failures": [...]}``.
Floats are written with 17 significant digits so that reruns can be
compared byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

__all__ = ["CheckRow", "Report", "fmt_float", "CHECK_COLUMNS"]

CHECK_COLUMNS = ("config_id", "N", "check_name", "lhs", "rhs", "margin", "pass")


def fmt_float(v) -> str:
    """Full-precision decimal rendering (17 significant digits)."""
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


@dataclass(frozen=True)
class CheckRow:
    """One verified relation: ``lhs`` compared to ``rhs`` with signed ``margin``.

    ``margin`` is positive when the relation holds with room to spare; its
    exact meaning depends on the check (slack of an inequality, tolerance
    minus residual of an identity).
    """

    config_id: str
    N: int
    check_name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool

    def as_csv_row(self) -> list[str]:
        return [
            self.config_id,
            str(self.N),
            self.check_name,
            fmt_float(self.lhs),
            fmt_float(self.rhs),
            fmt_float(self.margin),
            "1" if self.passed else "0",
        ]


@dataclass
class Report:
    """An ordered collection of check rows."""

    rows: list[CheckRow] = field(default_factory=list)

    def add(self, *rows: CheckRow) -> None:
        self.rows.extend(rows)

    def extend(self, rows: Iterable[CheckRow]) -> None:
        self.rows.extend(rows)

    @property
    def failures(self) -> list[CheckRow]:
        return [r for r in self.rows if not r.passed]

    @property
    def ok(self) -> bool:
        return not self.failures

    def first_failure(self) -> CheckRow | None:
        f = self.failures
        return f[0] if f else None

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CHECK_COLUMNS)
        for r in self.rows:
            w.writerow(r.as_csv_row())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def summary(self) -> dict:
        return {
            "checks_run": len(self.rows),
            "failures": [
                {k: (fmt_float(v) if isinstance(v, float) else v) for k, v in asdict(r).items()}
                for r in self.failures
            ],
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.summary(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text
