"""Compact regions for the grid solvers.

Planar regions (for Green capacity in the unit disk) expose ``contains(z)``
on complex arrays.  Log-modulus regions (Reinhardt compacts in the bidisk,
seen in the coordinates ``x_j = log|z_j|``) expose ``contains(x1, x2)`` and,
where it is known in closed form, the support function ``max_{x in K} w.x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


# -- planar ---------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) <= self.radius * (1 + 1e-12)

    def max_modulus(self) -> float:
        return abs(self.center) + self.radius


@dataclass(frozen=True)
class Annulus:
    center: complex
    inner: float
    outer: float

    def contains(self, z):
        d = np.abs(np.asarray(z) - self.center)
        return (d <= self.outer * (1 + 1e-12)) & (d >= self.inner * (1 - 1e-12))

    def max_modulus(self) -> float:
        return abs(self.center) + self.outer


@dataclass(frozen=True)
class Union:
    parts: tuple

    def contains(self, z):
        out = np.zeros(np.shape(z), dtype=bool)
        for p in self.parts:
            out |= p.contains(z)
        return out

    def max_modulus(self) -> float:
        return max(p.max_modulus() for p in self.parts)


@dataclass(frozen=True, eq=False)
class MaskRegion:
    """Cells of a row-major 0/1 grid over the square ``[-1, 1]^2``.

    Row 0 is the top row (``y`` near 1), column 0 the left column.
    """

    mask: np.ndarray

    def contains(self, z):
        z = np.asarray(z)
        rows, cols = self.mask.shape
        j = np.floor((z.real + 1) / 2 * cols).astype(int)
        i = np.floor((1 - z.imag) / 2 * rows).astype(int)
        ok = (i >= 0) & (i < rows) & (j >= 0) & (j < cols)
        out = np.zeros(z.shape, dtype=bool)
        out[ok] = self.mask[i[ok], j[ok]]
        return out

    def max_modulus(self) -> float:
        rows, cols = self.mask.shape
        i, j = np.nonzero(self.mask)
        if i.size == 0:
            return 0.0
        xs = np.stack([-1 + 2 * j / cols, -1 + 2 * (j + 1) / cols])
        ys = np.stack([1 - 2 * i / rows, 1 - 2 * (i + 1) / rows])
        return float(np.sqrt(np.max(np.abs(xs), axis=0) ** 2 + np.max(np.abs(ys), axis=0) ** 2).max())


def write_mask(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask, dtype=bool)
    rows, cols = mask.shape
    lines = ["mask v1", f"{rows} {cols}"]
    lines += ["".join("1" if c else "0" for c in row) for row in mask]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mask(path) -> MaskRegion:
    lines = [l.strip() for l in Path(path).read_text().splitlines() if l.strip()]
    if not lines or lines[0] != "mask v1":
        raise ValueError(f"{path}: missing 'mask v1' header")
    try:
        rows, cols = (int(x) for x in lines[1].split())
    except (IndexError, ValueError):
        raise ValueError(f"{path}: bad dimension line") from None
    body = [l.replace(" ", "") for l in lines[2:]]
    if len(body) != rows or any(len(l) != cols or set(l) - {"0", "1"} for l in body):
        raise ValueError(f"{path}: expected {rows} rows of {cols} 0/1 cells")
    return MaskRegion(np.array([[c == "1" for c in l] for l in body], dtype=bool))


def parse_planar(spec: str):
    """Parse ``disk:c:r``, ``annulus:c:r_in:r_out`` items joined by ``;``.

    Centers are Python complex literals, e.g. ``disk:0.4:0.2; disk:-0.4:0.2``.
    A single ``mask:<path>`` item loads a mask file.
    """
    parts = []
    for item in spec.split(";"):
        item = item.strip()
        if not item:
            continue
        kind, *args = [a.strip() for a in item.split(":")]
        if kind == "disk" and len(args) == 2:
            parts.append(Disk(complex(args[0]), float(args[1])))
        elif kind == "annulus" and len(args) == 3:
            parts.append(Annulus(complex(args[0]), float(args[1]), float(args[2])))
        elif kind == "mask" and len(args) >= 1:
            parts.append(read_mask(":".join(args)))
        else:
            raise ValueError(f"bad region item {item!r}")
    if not parts:
        raise ValueError("empty region")
    return parts[0] if len(parts) == 1 else Union(tuple(parts))


# -- log-modulus (toric) ----------------------------------------------------

@dataclass(frozen=True)
class LogBox:
    """``[lo1, hi1] x [lo2, hi2]`` in log-modulus coordinates; ``lo`` may be ``-inf``."""

    lo1: float
    hi1: float
    lo2: float
    hi2: float

    def contains(self, x1, x2):
        tol = 1e-12
        return ((x1 >= self.lo1 - tol) & (x1 <= self.hi1 + tol)
                & (x2 >= self.lo2 - tol) & (x2 <= self.hi2 + tol))

    def support(self, w: np.ndarray) -> np.ndarray:
        w = np.atleast_2d(w)
        return w[:, 0] * self.hi1 + w[:, 1] * self.hi2

    @property
    def anchor(self) -> tuple[float, float]:
        return (self.hi1, self.hi2)

    @property
    def upper(self) -> tuple[float, float]:
        return (self.hi1, self.hi2)


def LogSublevel(s: float) -> LogBox:
    """``{max(log|z_1|, log|z_2|) <= log s}``, the closed bidisk of radius `s`."""
    if not 0 < s < 1:
        raise ValueError("need 0 < s < 1")
    return LogBox(-math.inf, math.log(s), -math.inf, math.log(s))


def LogAnnuli(a1: float, b1: float, a2: float, b2: float) -> LogBox:
    """Product of annuli ``{a_j <= |z_j| <= b_j}``."""
    return LogBox(math.log(a1), math.log(b1), math.log(a2), math.log(b2))


@dataclass(frozen=True)
class LogUnion:
    parts: tuple

    def contains(self, x1, x2):
        out = np.zeros(np.broadcast(x1, x2).shape, dtype=bool)
        for p in self.parts:
            out |= p.contains(x1, x2)
        return out

    def support(self, w):
        return np.max(np.stack([p.support(w) for p in self.parts]), axis=0)

    @property
    def anchor(self):
        # align the grid with the part that reaches furthest to the upper right
        return max((p.anchor for p in self.parts), key=lambda a: a[0] + a[1])

    @property
    def upper(self):
        return (max(p.upper[0] for p in self.parts), max(p.upper[1] for p in self.parts))


@dataclass(frozen=True)
class LogPredicate:
    """Arbitrary region given by a vectorized predicate and its upper corner."""

    func: Callable
    upper: tuple[float, float]
    anchor: tuple[float, float] | None = None

    def contains(self, x1, x2):
        return np.asarray(self.func(x1, x2), dtype=bool)


def parse_log_region(spec: str):
    """Parse ``sublevel:s``, ``annuli:a1,b1,a2,b2``, ``box:lo1,hi1,lo2,hi2`` joined by ``;``."""
    parts = []
    for item in spec.split(";"):
        item = item.strip()
        if not item:
            continue
        kind, _, rest = item.partition(":")
        vals = [float(v) for v in rest.split(",")]
        if kind == "sublevel" and len(vals) == 1:
            parts.append(LogSublevel(vals[0]))
        elif kind == "annuli" and len(vals) == 4:
            parts.append(LogAnnuli(*vals))
        elif kind == "box" and len(vals) == 4:
            parts.append(LogBox(*vals))
        else:
            raise ValueError(f"bad log-region item {item!r}")
    if not parts:
        raise ValueError("empty region")
    return parts[0] if len(parts) == 1 else LogUnion(tuple(parts))
