"""Experiment reports and their JSON / CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__

SIG_DIGITS = 12


def clean(x: Any) -> Any:
    """Convert numpy types to plain Python and round floats to 12 significant digits."""
    if isinstance(x, dict):
        return {str(k): clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, complex):
        return [clean(x.real), clean(x.imag)]
    return x


@dataclass
class Check:
    name: str
    measured: float
    bound: float | None
    passed: bool
    relation: str = "<="

    def to_dict(self) -> dict:
        return {"name": self.name, "measured": self.measured, "bound": self.bound,
                "relation": self.relation, "pass": bool(self.passed)}


def check_le(name: str, measured: float, bound: float, slack: float = 0.0) -> Check:
    return Check(name, float(measured), float(bound), bool(measured <= bound + slack), "<=")


def check_ge(name: str, measured: float, bound: float, slack: float = 0.0) -> Check:
    return Check(name, float(measured), float(bound), bool(measured >= bound - slack), ">=")


def check_close(name: str, measured: float, target: float, tol: float) -> Check:
    return Check(name, float(measured), float(target), bool(abs(measured - target) <= tol), f"~{tol:g}")


@dataclass
class Report:
    experiment: str
    params: dict
    results: dict
    checks: list[Check] = field(default_factory=list)
    seed: int | None = None
    version: str = __version__
    wall_clock: float = 0.0
    rows: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return clean({
            "experiment": self.experiment,
            "params": self.params,
            "results": self.results,
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
            "seed": self.seed,
            "version": self.version,
            "wall_clock": self.wall_clock,
            "rows": self.rows,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        """One row per key / trial, then a summary row holding scalar results and checks."""
        d = self.to_dict()
        summary = {"row": "summary", "experiment": d["experiment"]}
        for k, v in d["results"].items():
            if not isinstance(v, (list, dict)):
                summary[k] = v
        for c in d["checks"]:
            summary[f"check:{c['name']}"] = c["pass"]
        rows = [{"row": i, **r} for i, r in enumerate(d["rows"])] + [summary]
        cols: list[str] = []
        for r in rows:
            cols += [k for k in r if k not in cols]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()


def from_json(text: str) -> dict:
    return json.loads(text)


def emit(report: Report, fmt: str = "json", path: str | Path | None = None) -> str:
    if fmt == "json":
        text = report.to_json() + "\n"
    elif fmt == "csv":
        text = report.to_csv()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text
