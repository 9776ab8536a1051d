"""Check reports: named residual-vs-bound records with CSV export.

The flat CSV schema is "name,n,t,residual,bound,pass". Columns n and t are
blank when a record has no seminorm index or time attached. Floats are
written with repr so reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class CheckRecord:
    name: str
    residual: float
    bound: float
    passed: bool
    n: float = math.nan
    t: float = math.nan


@dataclass
class CheckReport:
    title: str
    records: list[CheckRecord] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, name: str, residual: float, bound: float,
            n: float = math.nan, t: float = math.nan,
            passed: bool | None = None) -> CheckRecord:
        if passed is None:
            passed = residual <= bound
        rec = CheckRecord(name, float(residual), float(bound), bool(passed), n, t)
        self.records.append(rec)
        return rec

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def worst(self) -> CheckRecord | None:
        """Record with the largest residual/bound ratio (failures first)."""
        if not self.records:
            return None
        def key(r: CheckRecord):
            ratio = r.residual / r.bound if r.bound > 0 else math.inf * (r.residual > 0)
            return (not r.passed, ratio)
        return max(self.records, key=key)

    def extend(self, other: "CheckReport") -> None:
        self.records.extend(other.records)
        self.meta.update(other.meta)

    def csv_text(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["name", "n", "t", "residual", "bound", "pass"])
        for r in self.records:
            writer.writerow([
                r.name,
                "" if math.isnan(r.n) else repr(float(r.n)),
                "" if math.isnan(r.t) else repr(float(r.t)),
                repr(r.residual),
                repr(r.bound),
                "true" if r.passed else "false",
            ])
        return out.getvalue()

    def save_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.csv_text())

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "meta": self.meta,
            "records": [
                {
                    "name": r.name,
                    "n": None if math.isnan(r.n) else r.n,
                    "t": None if math.isnan(r.t) else r.t,
                    "residual": r.residual,
                    "bound": r.bound,
                    "pass": r.passed,
                }
                for r in self.records
            ],
        }

    def save_json(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
