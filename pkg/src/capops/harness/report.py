"""Experiment reports: verdicts, artifacts and their JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

REPORT_NAME = "report.json"


@dataclass
class Verdict:
    """One checked claim.  `value` is compared with `target` by `comparison`."""

    name: str
    passed: bool
    value: float | None = None
    target: float | None = None
    tolerance: float | None = None
    comparison: str = ""
    oracle: str = ""

    @classmethod
    def relative(cls, name, value, target, tol, oracle=""):
        err = abs(value / target - 1) if target not in (0, math.inf) else abs(value - target)
        return cls(name, bool(err <= tol), float(value), float(target), float(tol),
                   "relative error", oracle)

    @classmethod
    def at_most(cls, name, value, bound, oracle=""):
        return cls(name, bool(value <= bound), float(value), float(bound), None, "<=", oracle)

    @classmethod
    def flag(cls, name, ok, oracle="", value=None):
        return cls(name, bool(ok), None if value is None else float(value), None, None,
                   "holds", oracle)


@dataclass
class Artifact:
    kind: str
    path: str  # relative to the report directory


@dataclass
class ExperimentReport:
    name: str
    kind: str
    config: dict
    seed: int
    verdicts: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    runtime_s: float = 0.0
    error: str | None = None
    directory: str = ""

    @property
    def passed(self) -> bool:
        return self.error is None and all(v.passed for v in self.verdicts)

    def to_json(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def write(self, directory=None) -> Path:
        directory = Path(directory or self.directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / REPORT_NAME
        path.write_text(json.dumps(self.to_json(), indent=2, default=_jsonable, allow_nan=True))
        return path


def _jsonable(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "item"):
        return o.item()
    return str(o)


def load_report(path) -> ExperimentReport:
    path = Path(path)
    d = json.loads(path.read_text())
    d.pop("passed", None)
    d["verdicts"] = [Verdict(**v) for v in d.get("verdicts", [])]
    d["artifacts"] = [Artifact(**a) for a in d.get("artifacts", [])]
    d["directory"] = str(path.parent)
    return ExperimentReport(**d)
