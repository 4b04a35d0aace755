"""Polydisks, balls and products of balls.

All three are complete Reinhardt domains whose gauge is the max over blocks of
the block's Euclidean norm.  A :class:`Domain` is just the list of block sizes
plus a `kind` tag; the tag only matters for the good-Reinhardt constants and
for serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from capops import lattice

KINDS = ("polydisk", "ball", "pob")


@dataclass(frozen=True)
class Domain:
    kind: str
    blocks: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not self.blocks or any(int(b) < 1 for b in self.blocks):
            raise ValueError(f"invalid block sizes {self.blocks!r}")
        if self.kind == "polydisk" and any(b != 1 for b in self.blocks):
            raise ValueError("polydisk blocks must all have size 1")
        if self.kind == "ball" and len(self.blocks) != 1:
            raise ValueError("ball has a single block")

    @property
    def N(self) -> int:
        return sum(self.blocks)

    @property
    def tag(self) -> str:
        if self.kind == "pob":
            return "pob:" + ",".join(str(b) for b in self.blocks)
        return f"{self.kind}:{self.N}"

    def block_slices(self) -> list[slice]:
        out, start = [], 0
        for b in self.blocks:
            out.append(slice(start, start + b))
            start += b
        return out

    def __str__(self):
        return self.tag


def Polydisk(N: int) -> Domain:
    return Domain("polydisk", (1,) * int(N))


def Ball(N: int) -> Domain:
    return Domain("ball", (int(N),))


def ProductOfBalls(*sizes: int) -> Domain:
    if len(sizes) == 1 and not isinstance(sizes[0], int):
        sizes = tuple(sizes[0])
    return Domain("pob", tuple(int(s) for s in sizes))


def parse_domain(tag: str) -> Domain:
    """Inverse of :attr:`Domain.tag` (``polydisk:2``, ``ball:3``, ``pob:2,1``)."""
    try:
        kind, _, rest = tag.strip().partition(":")
        kind = kind.strip().lower()
        if kind == "polydisk":
            return Polydisk(int(rest))
        if kind == "ball":
            return Ball(int(rest))
        if kind == "pob":
            return ProductOfBalls(*[int(x) for x in rest.split(",")])
    except ValueError as exc:
        raise ValueError(f"bad domain tag {tag!r}: {exc}") from None
    raise ValueError(f"bad domain tag {tag!r}")


def _as_points(domain: Domain, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != domain.N:
        raise ValueError(f"points have dimension {z.shape[-1]}, domain has {domain.N}")
    return z


def minkowski(domain: Domain, z) -> np.ndarray | float:
    """Gauge of `domain` at `z` (last axis is the coordinate axis)."""
    z = _as_points(domain, z)
    a2 = np.abs(z) ** 2
    norms = [np.sqrt(a2[..., s].sum(axis=-1)) for s in domain.block_slices()]
    out = np.max(np.stack(norms, axis=-1), axis=-1)
    return float(out) if out.ndim == 0 else out


def green_function(domain: Domain, z) -> np.ndarray | float:
    """Pluricomplex Green function with pole at 0, ``log j(z)``; ``-inf`` at the pole."""
    j = minkowski(domain, z)
    with np.errstate(divide="ignore"):
        out = np.log(j)
    return float(out) if np.ndim(out) == 0 else out


def monomial_log_norm_sq(domain: Domain, alphas) -> np.ndarray:
    """Log of the squared H^2 norm of ``z^alpha`` for each row of `alphas`."""
    a = np.asarray(alphas, dtype=np.int64)
    squeeze = a.ndim == 1
    a = np.atleast_2d(a)
    if a.shape[1] != domain.N:
        raise ValueError(f"indices have length {a.shape[1]}, domain has {domain.N}")
    lg = np.vectorize(math.lgamma, otypes=[float])
    out = np.zeros(a.shape[0])
    for s, l in zip(domain.block_slices(), domain.blocks):
        beta = a[:, s]
        out += math.lgamma(l) + lg(beta + 1).sum(axis=1) - lg(l + beta.sum(axis=1))
    return out[0] if squeeze else out


def monomial_norm_sq(domain: Domain, alpha: Sequence[int]) -> float:
    """Squared H^2 norm of ``z^alpha``.

    Per block of size ``l`` with sub-index ``beta`` the factor is
    ``(l-1)! beta! / (l-1+|beta|)!``; blocks of size one contribute exactly 1.
    """
    alpha = lattice.check_index(alpha, domain.N)
    return float(np.exp(monomial_log_norm_sq(domain, alpha)))


def monomial_norms(domain: Domain, alphas) -> np.ndarray:
    """Non-squared norms for an ``(M, N)`` array of indices."""
    return np.exp(0.5 * monomial_log_norm_sq(domain, np.atleast_2d(alphas)))


@lru_cache(maxsize=None)
def _polydisk_constant(N: int) -> float:
    # binom(N-1+p, p) / p^N is decreasing once p >= N, so a finite scan is the sup
    best = 1.0
    for p in range(1, 4 * N + 64):
        best = max(best, math.comb(N - 1 + p, p) / p**N)
    return best


def good_reinhardt_constants(domain: Domain) -> tuple[float, int]:
    """``(C, c)`` such that the degree-p kernel sum is <= ``C max(p,1)^(cN) j^(2p)``."""
    N = domain.N
    if domain.kind == "polydisk":
        return _polydisk_constant(N), 1
    if domain.kind == "ball":
        return float(2**N), 1
    m = len(domain.blocks)
    return _polydisk_constant(m) * 2.0**N, 2


class ReinhardtCheck(NamedTuple):
    lhs: float
    rhs: float
    ok: bool


def kernel_degree_sum(domain: Domain, z, p: int) -> np.ndarray | float:
    """``sum_{|alpha|=p} |z^alpha|^2 / ||e_alpha||^2`` for one or many points."""
    z = _as_points(domain, z)
    alphas = np.array(lattice.enumerate_degree(domain.N, p), dtype=np.int64)
    log_norm = monomial_log_norm_sq(domain, alphas)
    pts = z.reshape(-1, domain.N)
    with np.errstate(divide="ignore"):
        loga = np.log(np.abs(pts))
    zero = alphas == 0
    vals = np.empty(pts.shape[0])
    step = max(1, 4_000_000 // (alphas.size or 1))
    for start in range(0, pts.shape[0], step):
        la = loga[start:start + step, None, :]
        with np.errstate(invalid="ignore"):
            # 0 * log 0 counts as 0
            terms = np.where(zero[None], 0.0, 2 * alphas[None] * la)
        vals[start:start + step] = np.exp(terms.sum(axis=-1) - log_norm[None, :]).sum(axis=-1)
    return float(vals[0]) if z.ndim == 1 else vals.reshape(z.shape[:-1])


def good_reinhardt_check(domain: Domain, z, p: int) -> ReinhardtCheck:
    z = _as_points(domain, z)
    j = minkowski(domain, z)
    if j >= 1:
        raise ValueError("point must be interior (gauge < 1)")
    if p < 0:
        raise ValueError("p must be non-negative")
    C, c = good_reinhardt_constants(domain)
    lhs = kernel_degree_sum(domain, z, p)
    rhs = C * max(p, 1) ** (c * domain.N) * j ** (2 * p)
    return ReinhardtCheck(lhs, rhs, bool(lhs <= rhs))


def _sphere(rng: np.random.Generator, n: int, l: int) -> np.ndarray:
    g = rng.standard_normal((n, l)) + 1j * rng.standard_normal((n, l))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def boundary_points(domain: Domain, resolution: int, rng: np.random.Generator | None = None
                    ) -> tuple[np.ndarray, bool]:
    """Sample nodes on the distinguished boundary; returns ``(points, is_grid)``.

    The polydisk uses an equispaced tensor grid with `resolution` nodes per
    circle.  Balls and products use `resolution` Monte-Carlo samples arranged as
    antithetic pairs ``(u, -u)``.
    """
    if domain.kind == "polydisk":
        th = 2 * np.pi * np.arange(resolution) / resolution
        grids = np.meshgrid(*([th] * domain.N), indexing="ij")
        pts = np.exp(1j * np.stack([g.ravel() for g in grids], axis=-1))
        return pts, True
    if rng is None:
        rng = np.random.default_rng(0)
    half = max(1, resolution // 2)
    parts = [_sphere(rng, half, l) for l in domain.blocks]
    u = np.concatenate(parts, axis=1)
    return np.concatenate([u, -u], axis=0), False


def boundary_quadrature(domain: Domain, f: Callable, g: Callable, resolution: int,
                        degree: int | None = None, rng: np.random.Generator | None = None,
                        return_stderr: bool = False):
    """Approximate ``int f conj(g)`` against the normalized boundary measure.

    `f` and `g` take an ``(M, N)`` complex array and return ``M`` values.  On
    the polydisk the torus rule is exact for polynomials whose per-coordinate
    degree is below `resolution`; pass `degree` to have that checked.
    """
    if resolution < 1:
        raise ValueError("resolution must be positive")
    if domain.kind == "polydisk" and degree is not None and resolution <= degree:
        raise ValueError(f"resolution {resolution} cannot integrate degree {degree} exactly; "
                         f"need resolution > {degree}")
    pts, is_grid = boundary_points(domain, resolution, rng)
    vals = np.asarray(f(pts)) * np.conj(np.asarray(g(pts)))
    value = complex(vals.mean())
    if not return_stderr:
        return value
    if is_grid:
        return value, 0.0
    half = vals.size // 2
    pair = 0.5 * (vals[:half] + vals[half:])
    stderr = float(np.std(pair, ddof=1) / math.sqrt(half)) if half > 1 else math.inf
    return value, stderr
