"""Kolmogorov widths of the restricted unit ball, bracketed by Hilbert widths.

The H^2 unit ball evaluated on m sample points of K is the image of the unit
ball of coefficients under the evaluation matrix ``E[s, alpha] = z_s^alpha /
||e_alpha||``.  Its Hilbert widths ``sigma_n(E)`` give the brackets

    sigma_n / sqrt(m)  <=  d_n  <=  sigma_n + tail_D(r_K)

where ``tail_D`` bounds the sup over K of the degree ``> D`` part.  The factor
``sqrt(m)`` is sub-exponential, so both brackets share the n-th-root rate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from capops import lattice
from capops.compop import geom_tail
from capops.domains import Domain, good_reinhardt_constants, minkowski, monomial_log_norm_sq

#: Column-normalized condition number above which sampling is declared aliased.
MAX_CONDITION = 1e8
#: Widths below this fraction of the first are treated as round-off.
NOISE_FLOOR = 1e-13


class SamplingError(ValueError):
    """The sample set cannot resolve the polynomial basis."""


@dataclass(frozen=True)
class WidthEstimate:
    n: int
    lower: float
    upper: float
    m: int
    D: int
    #: ``upper / lower`` bound: ``sqrt(m)`` unless the Taylor tail dominates
    sandwich_factor: float


def circle_samples(radius: float, m: int) -> np.ndarray:
    """``m`` equispaced points on ``|z| = radius``, shape ``(m, 1)``."""
    th = 2 * np.pi * np.arange(m) / m
    return (radius * np.exp(1j * th))[:, None]


def torus_samples(radius: float | Sequence[float], per_axis: int, N: int | None = None
                  ) -> np.ndarray:
    """Tensor grid on the torus ``|z_j| = radius_j``, shape ``(per_axis**N, N)``."""
    r = np.atleast_1d(np.asarray(radius, dtype=float))
    if N is not None and r.size == 1:
        r = np.full(N, r[0])
    N = r.size
    th = 2 * np.pi * np.arange(per_axis) / per_axis
    grids = np.meshgrid(*([th] * N), indexing="ij")
    ang = np.stack([g.ravel() for g in grids], axis=1)
    return r[None, :] * np.exp(1j * ang)


def evaluation_matrix(domain: Domain, samples: np.ndarray, D: int) -> np.ndarray:
    """``E[s, alpha] = z_s^alpha / ||e_alpha||`` over ``|alpha| <= D``."""
    idx = lattice.index_array(domain.N, D)
    z = np.asarray(samples, dtype=complex).reshape(-1, domain.N)
    log_norm = 0.5 * monomial_log_norm_sq(domain, idx)
    E = np.ones((z.shape[0], len(idx)), dtype=complex)
    for j in range(domain.N):
        powers = z[:, j:j + 1] ** np.arange(D + 1)[None, :]
        E *= powers[:, idx[:, j]]
    return E * np.exp(-log_norm)[None, :]


def taylor_tail(domain: Domain, r_K: float, D: int) -> float:
    """Sup over ``{j <= r_K}`` of the degree ``> D`` part of a unit-norm H^2 function."""
    C, c = good_reinhardt_constants(domain)
    _, bound = geom_tail(c * domain.N, D + 1, r_K**2)
    return math.sqrt(C * bound)


def widths_sampled(domain: Domain, samples: np.ndarray, D: int, n_max: int | None = None,
                   r_K: float | None = None) -> list[WidthEstimate]:
    """Width brackets for ``n = 1..n_max`` from samples of K.

    Raises
    ------
    SamplingError
        If a sample is not interior, or the column-normalized evaluation matrix
        has condition number above ``MAX_CONDITION`` (aliased sampling).
    """
    z = np.asarray(samples, dtype=complex).reshape(-1, domain.N)
    j = np.atleast_1d(minkowski(domain, z))
    rk = float(j.max())
    if r_K is None:
        r_K = rk
    elif rk > r_K * (1 + 1e-12):
        raise SamplingError(f"samples reach gauge {rk:.6g} above the declared r_K={r_K}")
    if r_K >= 1:
        raise SamplingError("samples must be interior")
    E = evaluation_matrix(domain, z, D)
    m, k = E.shape
    if n_max is None:
        n_max = k
    if n_max > min(m, k):
        raise SamplingError(f"n_max={n_max} exceeds min(samples={m}, basis={k})")
    colnorm = np.linalg.norm(E, axis=0)
    if np.any(colnorm == 0):
        raise SamplingError("a basis function vanishes on all samples")
    sv = scipy.linalg.svdvals(E / colnorm)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else math.inf
    if len(sv) < k or cond > MAX_CONDITION:
        raise SamplingError(f"evaluation matrix is rank deficient: {m} samples for {k} "
                            f"basis functions, column-normalized condition {cond:.3e}")
    s = scipy.linalg.svdvals(E)[:n_max]
    tail = taylor_tail(domain, r_K, D)
    lo = np.minimum.accumulate(s / math.sqrt(m))
    up = np.minimum.accumulate(s + tail)
    out = []
    for n in range(n_max):
        ratio = up[n] / lo[n] if lo[n] > 0 else math.inf
        out.append(WidthEstimate(n + 1, float(lo[n]), float(up[n]), m, D,
                                 float(max(math.sqrt(m), ratio))))
    return out


class WidthRate(NamedTuple):
    slope: float
    residual: float
    intercept: float
    stderr: float
    n: np.ndarray


def width_rate(estimates: Sequence[WidthEstimate], N: int,
               n_range: tuple[int, int] | None = None, use: str = "geometric") -> WidthRate:
    """Least-squares slope of ``-log d_{n^N}`` against n.

    `use` selects ``lower``, ``upper`` or their ``geometric`` mean.  Without
    `n_range`, every n from 2 up to the round-off floor is used.
    """
    if use not in ("lower", "upper", "geometric"):
        raise ValueError(f"unknown bracket {use!r}")
    lo = np.array([e.lower for e in estimates], dtype=float)
    up = np.array([e.upper for e in estimates], dtype=float)
    if use == "lower":
        d = lo
    elif use == "upper":
        d = up
    else:
        with np.errstate(invalid="ignore"):
            d = np.sqrt(lo * up)
    d = np.minimum.accumulate(d)
    nmax = int(math.floor(len(d) ** (1 / N) + 1e-9))
    n = np.arange(1, nmax + 1)
    n = n[n**N <= len(d)]
    dn = d[n**N - 1]
    ok = (lo[n**N - 1] > 0) & (dn > 0)
    if n_range is not None:
        ok &= (n >= n_range[0]) & (n <= n_range[1])
    else:
        ok &= (n >= 2) & (dn > NOISE_FLOOR * d[0])
    if ok.sum() < 8:
        raise ValueError(f"need at least 8 usable widths, have {int(ok.sum())}")
    x, y = n[ok].astype(float), -np.log(dn[ok])
    X = np.c_[x, np.ones_like(x)]
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    dof = max(len(x) - 2, 1)
    var = float(r @ r) / dof
    cov = var * np.linalg.inv(X.T @ X)
    if not np.isfinite(coef).all():
        raise ValueError("degenerate fit")
    return WidthRate(float(coef[0]), float(np.linalg.norm(r)), float(coef[1]),
                     float(math.sqrt(cov[0, 0])), n[ok])


def widths_to_csv(estimates: Sequence[WidthEstimate], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "lower", "upper", "sandwich_factor"])
        for e in estimates:
            w.writerow([e.n, repr(e.lower), repr(e.upper), repr(e.sandwich_factor)])
