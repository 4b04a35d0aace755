"""Multi-indices and weighted lattice-point counting.

Multi-indices are plain tuples of non-negative ints.  Everything that indexes
matrix rows or columns goes through :func:`enumerate_degree` /
:func:`enumerate_up_to`, so the ordering is fixed in one place.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

MultiIndex = tuple

#: Default guard for exact counts and enumerations.
COUNT_CAP = 10**9

# Weighted sums that land on the threshold up to rounding are counted.
_BOUNDARY_RTOL = 1e-12


class LatticeCapError(ValueError):
    """Raised when an enumeration would exceed the configured cap."""


def degree(alpha: Sequence[int]) -> int:
    return int(sum(alpha))


def factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def check_index(alpha: Sequence[int], N: int | None = None) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha) or not alpha:
        raise ValueError(f"invalid multi-index {alpha!r}")
    if N is not None and len(alpha) != N:
        raise ValueError(f"multi-index {alpha!r} has length {len(alpha)}, expected {N}")
    return alpha


@lru_cache(maxsize=512)
def enumerate_degree(N: int, p: int) -> tuple[MultiIndex, ...]:
    """All multi-indices of length `N` and degree `p`, in lexicographic order.

    Within one degree the order is increasing lexicographic, so for ``N=2, p=2``
    the result is ``((0, 2), (1, 1), (2, 0))``.  The count is
    ``binomial(N - 1 + p, p)``.
    """
    if N < 1 or p < 0:
        raise ValueError(f"need N >= 1 and p >= 0, got N={N}, p={p}")
    if N == 1:
        return ((p,),)
    out = []
    for first in range(p + 1):
        for rest in enumerate_degree(N - 1, p - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=128)
def enumerate_up_to(N: int, D: int) -> tuple[MultiIndex, ...]:
    """Graded lexicographic enumeration of all indices with ``|alpha| <= D``."""
    out: list[MultiIndex] = []
    for p in range(D + 1):
        out.extend(enumerate_degree(N, p))
    return tuple(out)


def index_array(N: int, D: int) -> np.ndarray:
    """`enumerate_up_to` as an ``(count, N)`` integer array."""
    return np.array(enumerate_up_to(N, D), dtype=np.int64).reshape(-1, N)


def count_up_to(N: int, D: int) -> int:
    return math.comb(N + D, D)


def _check_sigma(sigma: Sequence[float]) -> np.ndarray:
    s = np.asarray(sigma, dtype=float).ravel()
    if s.size == 0 or not np.all(s > 0) or not np.all(np.isfinite(s)):
        raise ValueError(f"weights must be finite and positive, got {sigma!r}")
    return s


def nu_asymptotic(sigma: Sequence[float], A: float) -> float:
    """Leading-order volume count ``A^N / (N! prod(sigma))``."""
    s = _check_sigma(sigma)
    if A <= 0:
        raise ValueError("A must be positive")
    N = s.size
    return float(math.exp(N * math.log(A) - math.lgamma(N + 1) - np.log(s).sum()))


def _partial_sums(s: np.ndarray, A: float, cap: int) -> np.ndarray:
    """Weighted sums of every index in the leading ``len(s)`` coordinates with sum <= A."""
    thresh = A * (1 + _BOUNDARY_RTOL)
    partial = np.zeros(1)
    for w in s:
        room = np.floor((thresh - partial) / w).astype(np.int64)
        total = int(room.sum()) + partial.size
        if total > cap:
            raise LatticeCapError(f"enumeration exceeds cap {cap}")
        reps = room + 1
        base = np.repeat(partial, reps)
        starts = np.cumsum(reps) - reps
        steps = np.arange(base.size) - np.repeat(starts, reps)
        partial = base + steps * w
    return partial


def count_weighted(sigma: Sequence[float], A: float, cap: int = COUNT_CAP) -> int:
    """Exact number of multi-indices with ``sum(alpha_j * sigma_j) <= A``.

    The last coordinate is summed in closed form (a floor), the others are
    traversed exhaustively.  Raises :class:`LatticeCapError` if the count would
    exceed `cap`.
    """
    s = _check_sigma(sigma)
    if A < 0:
        return 0
    if A / s.min() > cap:
        raise LatticeCapError(f"count for A={A} would exceed cap {cap}")
    partial = _partial_sums(s[:-1], A, cap)
    thresh = A * (1 + _BOUNDARY_RTOL)
    last = np.floor((thresh - partial) / s[-1]).astype(np.int64) + 1
    total = int(last.sum(dtype=np.int64))
    if total > cap:
        raise LatticeCapError(f"count {total} exceeds cap {cap}")
    return total


def enumerate_weighted(sigma: Sequence[float], A: float, cap: int = COUNT_CAP
                       ) -> tuple[np.ndarray, np.ndarray]:
    """All indices with weighted degree <= A, as ``(indices, weights)``.

    `indices` is an ``(M, N)`` int array, `weights` the matching values of
    ``sum(alpha_j * sigma_j)``.  Order is lexicographic in the index.
    """
    s = _check_sigma(sigma)
    thresh = A * (1 + _BOUNDARY_RTOL)
    idx = np.zeros((1, 0), dtype=np.int64)
    partial = np.zeros(1)
    for w in s:
        room = np.floor((thresh - partial) / w).astype(np.int64)
        reps = np.maximum(room + 1, 0)
        if int(reps.sum()) > cap:
            raise LatticeCapError(f"enumeration exceeds cap {cap}")
        starts = np.cumsum(reps) - reps
        steps = np.arange(int(reps.sum())) - np.repeat(starts, reps)
        idx = np.hstack([np.repeat(idx, reps, axis=0), steps[:, None]])
        partial = np.repeat(partial, reps) + steps * w
    return idx, partial
