"""Experiment configuration: one INI file, one ``[experiment]`` section.

Every key is declared in a per-kind schema with a parser and a range check;
anything else is rejected.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

KINDS = ("kara", "mata", "capacity", "widths", "good_reinhardt", "dilation", "tails")
DEFAULT_SEED = 20240607
OUT_ENV = "CAPOPS_OUT"


class ConfigError(ValueError):
    def __init__(self, key: str, reason: str):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.replace(";", ",").split(",") if x.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.replace(";", ",").split(",") if x.strip())


def _pair(s: str) -> tuple[int, int]:
    v = _ints(s)
    if len(v) != 2:
        raise ValueError("expected two integers")
    return v


def _bool(s: str) -> bool:
    if s.strip().lower() in ("1", "true", "yes", "on"):
        return True
    if s.strip().lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


@dataclass(frozen=True)
class Knob:
    parse: Callable[[str], Any]
    default: Any
    check: Callable[[Any], bool] = lambda v: True
    rule: str = ""


def _pos(v) -> bool:
    return v > 0


def _unit(v) -> bool:
    return 0 < v < 1


def _all(pred):
    return lambda vs: len(vs) > 0 and all(pred(v) for v in vs)


COMMON = {
    "kind": Knob(str, None, lambda v: v in KINDS, f"one of {', '.join(KINDS)}"),
    "name": Knob(str, None, lambda v: bool(v) and "/" not in v, "non-empty, no '/'"),
    "seed": Knob(int, DEFAULT_SEED, lambda v: v >= 0, ">= 0"),
    "plots": Knob(_bool, True),
}

SCHEMAS: dict[str, dict[str, Knob]] = {
    "kara": {
        "symbol": Knob(str, "diag:0.5,0.3", lambda v: v.startswith("diag:"), "a diag: tag"),
        "n_max": Knob(int, 60, lambda v: 8 <= v <= 400, "8..400"),
        "fit_from": Knob(int, 0, lambda v: v >= 0, ">= 0 (0 = upper half)"),
        "tol": Knob(float, 0.05, _pos, "> 0"),
        "tol_corrected": Knob(float, 0.02, _pos, "> 0"),
    },
    "mata": {
        "sigma": Knob(_floats, (1.0, 1.0), _all(_pos), "positive reals"),
        "A": Knob(float, 0.0, lambda v: v >= 0, ">= 0 (0 = use target_count)"),
        "target_count": Knob(int, 100_000, lambda v: 1 <= v <= 10**8, "1..1e8"),
        "tol": Knob(float, 0.02, _pos, "> 0"),
    },
    "capacity": {
        "mode": Knob(str, "sublevel", lambda v: v in ("sublevel", "grid_1d", "toric_2d", "upper_bound"),
                     "sublevel | grid_1d | toric_2d | upper_bound"),
        "domain": Knob(str, "polydisk:2"),
        "s": Knob(_floats, (0.5,), _all(_unit), "values in (0, 1)"),
        "region": Knob(str, "disk:0:0.5"),
        "resolution": Knob(int, 256, lambda v: 8 <= v <= 8192, "8..8192"),
        "truncation": Knob(float, 4.0, _pos, "> 0"),
        "dist": Knob(_floats, (0.5,), _all(lambda v: 0 < v <= 1), "values in (0, 1]"),
        "tol": Knob(float, 0.02, _pos, "> 0"),
    },
    "widths": {
        "domain": Knob(str, "polydisk:1"),
        "radius": Knob(float, 0.4, _unit, "in (0, 1)"),
        "samples": Knob(int, 512, lambda v: 4 <= v <= 4096, "4..4096 per axis"),
        "D": Knob(int, 80, lambda v: 1 <= v <= 400, "1..400"),
        "n_range": Knob(_pair, (10, 30), lambda v: 1 <= v[0] < v[1], "lo < hi"),
        "tol": Knob(float, 0.10, _pos, "> 0"),
    },
    "good_reinhardt": {
        "domain": Knob(str, "polydisk:2"),
        "points": Knob(int, 10_000, lambda v: 1 <= v <= 10**6, "1..1e6"),
        "p_max": Knob(int, 60, lambda v: 0 <= v <= 200, "0..200"),
        "j_max": Knob(float, 0.95, _unit, "in (0, 1)"),
    },
    "dilation": {
        "symbol": Knob(str, "diag:0.5,0.3"),
        "t": Knob(_floats, (math.log(0.9), math.log(0.5)), _all(lambda v: v < 0), "negative reals"),
        "n_max": Knob(int, 1000, lambda v: 1 <= v <= 20_000, "1..20000"),
        "tol": Knob(float, 1e-8, lambda v: v >= 0, ">= 0"),
    },
    "tails": {
        "m_max": Knob(int, 6, lambda v: 0 <= v <= 12, "0..12"),
        "l_max": Knob(int, 100, lambda v: 1 <= v <= 1000, "1..1000"),
        "x": Knob(_floats, tuple(k / 10 for k in range(1, 10)), _all(_unit), "values in (0, 1)"),
        "symbol": Knob(str, "diag:0.5,0.3", lambda v: v.startswith("diag:"), "a diag: tag"),
        "D": Knob(_ints, (10, 20, 30), _all(lambda v: 1 <= v <= 200), "degrees 1..200"),
    },
}


@dataclass
class ExperimentConfig:
    kind: str
    name: str
    seed: int
    knobs: dict = field(default_factory=dict)
    plots: bool = True
    source: str | None = None

    def __getitem__(self, key):
        return self.knobs[key]

    def as_dict(self) -> dict:
        d = {"kind": self.kind, "name": self.name, "seed": self.seed, "plots": self.plots}
        d.update({k: list(v) if isinstance(v, tuple) else v for k, v in self.knobs.items()})
        return d


def _validate(raw: dict[str, str], source: str | None) -> ExperimentConfig:
    if "kind" not in raw:
        raise ConfigError("kind", "missing")
    kind = raw["kind"].strip()
    if kind not in KINDS:
        raise ConfigError("kind", f"must be one of {', '.join(KINDS)}")
    schema = {**COMMON, **SCHEMAS[kind]}
    for key in raw:
        if key not in schema:
            raise ConfigError(key, f"unknown key for kind {kind!r}")
    values = {}
    for key, knob in schema.items():
        if key in raw:
            try:
                v = knob.parse(raw[key].strip())
            except ValueError as exc:
                raise ConfigError(key, f"cannot parse {raw[key]!r}: {exc}") from None
            if not knob.check(v):
                raise ConfigError(key, f"out of range: {raw[key]!r} (expected {knob.rule})")
        else:
            v = knob.default
        values[key] = v
    name = values.pop("name") or (Path(source).stem if source else kind)
    values.pop("kind")
    seed = values.pop("seed")
    plots = values.pop("plots")
    return ExperimentConfig(kind, name, seed, values, plots, source)


def parse_config_text(text: str, source: str | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str  # keys are case-sensitive (A, D)
    try:
        cp.read_string(text, source=source or "<string>")
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    sections = cp.sections()
    if sections != ["experiment"]:
        raise ConfigError("<file>", f"expected exactly one [experiment] section, found {sections}")
    return _validate(dict(cp["experiment"]), source)


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    path = Path(path)
    cfg = parse_config_text(path.read_text(), str(path))
    if seed is not None:
        cfg.seed = seed
    return cfg


def default_out_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "capops_out"))
