"""Composition operators on H^2 in the orthonormal monomial basis.

The matrix of ``C_phi`` restricted to polynomials of degree ``<= D`` is
assembled from the Taylor coefficients of ``phi^alpha``, rescaled by monomial
norms so that rows and columns refer to orthonormal vectors.  Its singular
values bracket the approximation numbers of the full operator: from below by
compression, from above by the certified truncation tail.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from capops import lattice
from capops.domains import (Domain, Polydisk, _polydisk_constant, good_reinhardt_constants,
                            monomial_log_norm_sq)

#: Refuse coefficient arrays larger than this many entries.
MEMORY_BUDGET = 50_000_000
#: Default target for the truncation certificate relative to ``a_target``.
DEFAULT_CERT_RTOL = 1e-12
MAX_DEFAULT_DEGREE = 400


class SymbolError(ValueError):
    """Symbol rejected: range not certified inside the domain."""


class MemoryBudgetError(ValueError):
    def __init__(self, entries: int, budget: int = MEMORY_BUDGET):
        super().__init__(f"coefficient storage of {entries} entries exceeds budget {budget}")
        self.entries = entries


# -- symbols -----------------------------------------------------------------

@dataclass(frozen=True)
class DiagonalSymbol:
    """``phi(z) = (r_1 z_1, ..., r_N z_N)`` with ``0 < r_j < 1``."""

    radii: tuple[float, ...]

    def __post_init__(self):
        r = tuple(float(x) for x in self.radii)
        object.__setattr__(self, "radii", r)
        if not r:
            raise SymbolError("need at least one radius")
        if not all(0 < x < 1 for x in r):
            raise SymbolError(f"diagonal radii must lie in (0, 1), got {r}")

    @property
    def N(self) -> int:
        return len(self.radii)

    @property
    def r0(self) -> float:
        return max(self.radii)

    def range_radius(self, domain: Domain | None = None) -> float:
        # j(r z) <= max(r) j(z) for all three gauge families, with equality on an axis
        return self.r0

    @property
    def degree(self) -> int:
        return 1

    @property
    def degree_preserving(self) -> bool:
        return True

    @property
    def tag(self) -> str:
        return "diag:" + ",".join(repr(x) for x in self.radii)


@dataclass(frozen=True)
class PolynomialSymbol:
    """Polynomial self-map; ``terms[i]`` lists ``(gamma, coeff)`` pairs of coordinate i.

    The range radius is certified by the triangle inequality: on the three
    domain families ``|z^gamma| <= 1``, so ``|phi_i| <= sum |coeff|``.
    """

    terms: tuple[tuple[tuple[tuple[int, ...], complex], ...], ...]

    def __post_init__(self):
        N = len(self.terms)
        if N == 0:
            raise SymbolError("need at least one coordinate")
        clean = []
        for comp in self.terms:
            merged: dict = {}
            for gamma, c in comp:
                g = lattice.check_index(gamma, N)
                merged[g] = merged.get(g, 0) + complex(c)
            clean.append(tuple(sorted((g, c) for g, c in merged.items() if c != 0)))
        object.__setattr__(self, "terms", tuple(clean))
        if self.r0 >= 1:
            raise SymbolError(f"certified range radius {self.r0:.6g} is not below 1")

    @property
    def N(self) -> int:
        return len(self.terms)

    def _coord_bounds(self) -> np.ndarray:
        return np.array([sum(abs(c) for _, c in comp) for comp in self.terms])

    @property
    def r0(self) -> float:
        return float(self._coord_bounds().max())

    def range_radius(self, domain: Domain | None = None) -> float:
        """Bound on ``sup j_domain(phi(z))``; polydisk gauge when `domain` is None."""
        S = self._coord_bounds()
        if domain is None:
            return float(S.max())
        if domain.N != self.N:
            raise ValueError("symbol and domain dimensions differ")
        return float(max(np.sqrt((S[s] ** 2).sum()) for s in domain.block_slices()))

    @property
    def degree(self) -> int:
        return max((sum(g) for comp in self.terms for g, _ in comp), default=0)

    @property
    def degree_preserving(self) -> bool:
        # linear without constant term: phi^alpha is homogeneous of degree |alpha|
        return all(sum(g) == 1 for comp in self.terms for g, _ in comp)

    @property
    def is_real(self) -> bool:
        return all(c.imag == 0 for comp in self.terms for _, c in comp)

    @property
    def tag(self) -> str:
        def num(c: complex) -> str:
            return repr(c.real) if c.imag == 0 else repr(c)

        parts = []
        for comp in self.terms:
            parts.append("+".join(f"({','.join(map(str, g))})->{num(c)}" for g, c in comp) or "0")
        return "poly:" + "|".join(parts)


Symbol = DiagonalSymbol | PolynomialSymbol

_TERM = re.compile(r"^\(([\d,\s]+)\)->(.+)$")


def parse_symbol(tag: str) -> Symbol:
    """Parse ``diag:0.5,0.3`` or ``poly:(0,1)->0.5|(1,0)->0.5``.

    In ``poly:`` tags, ``|`` separates output coordinates and ``+`` separates
    the terms of one coordinate; coefficients accept Python complex literals.
    """
    kind, _, rest = tag.strip().partition(":")
    if kind == "diag":
        return DiagonalSymbol(tuple(float(x) for x in rest.split(",")))
    if kind == "poly":
        comps = []
        for comp in rest.split("|"):
            comp = comp.strip()
            terms = []
            if comp != "0":
                for t in re.split(r"\+(?=\()", comp):
                    m = _TERM.match(t.strip())
                    if not m:
                        raise ValueError(f"bad polynomial term {t!r}")
                    gamma = tuple(int(x) for x in m.group(1).split(","))
                    terms.append((gamma, complex(m.group(2).strip())))
            comps.append(tuple(terms))
        return PolynomialSymbol(tuple(comps))
    raise ValueError(f"unknown symbol tag {tag!r}")


def swap_symbol(scale: float = 0.5) -> PolynomialSymbol:
    """``(z_1, z_2) -> scale * (z_2, z_1)``."""
    return PolynomialSymbol(((((0, 1), scale),), (((1, 0), scale),)))


def dilate_symbol(symbol: Symbol, t: float) -> Symbol:
    """``phi_t(w) = phi(e^t w)`` for ``t < 0``."""
    if not t < 0:
        raise ValueError("dilation parameter must be negative")
    s = math.exp(t)
    if isinstance(symbol, DiagonalSymbol):
        return DiagonalSymbol(tuple(r * s for r in symbol.radii))
    return PolynomialSymbol(tuple(tuple((g, c * s ** sum(g)) for g, c in comp)
                                  for comp in symbol.terms))


# -- Taylor coefficients -----------------------------------------------------

def _poly_times_sparse(P: np.ndarray, terms, L: int) -> np.ndarray:
    """Dense ``P`` (shape ``(L+1,)*N``) times a sparse polynomial, truncated per axis."""
    out = np.zeros_like(P)
    for gamma, c in terms:
        src = tuple(slice(0, L + 1 - g) for g in gamma)
        dst = tuple(slice(g, L + 1) for g in gamma)
        if any(g > L for g in gamma):
            continue
        out[dst] += c * P[src]
    return out


def _degree_mask(N: int, L: int) -> np.ndarray:
    grids = np.indices((L + 1,) * N)
    return grids.sum(axis=0) <= L


def _check_budget(entries: int) -> None:
    if entries > MEMORY_BUDGET:
        raise MemoryBudgetError(entries)


def taylor_coefficients(symbol: Symbol, alpha: Sequence[int], degree: int) -> dict:
    """Coefficients of ``phi^alpha`` up to total degree `degree`, as ``{beta: coeff}``."""
    alpha = lattice.check_index(alpha, symbol.N)
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if isinstance(symbol, DiagonalSymbol):
        if sum(alpha) > degree:
            return {}
        return {alpha: math.prod(r**a for r, a in zip(symbol.radii, alpha))}
    N, L = symbol.N, degree
    _check_budget((L + 1) ** N)
    dtype = float if symbol.is_real else complex
    P = np.zeros((L + 1,) * N, dtype=dtype)
    P[(0,) * N] = 1.0
    for i, a in enumerate(alpha):
        terms = [(g, c.real if dtype is float else c) for g, c in symbol.terms[i]]
        for _ in range(a):
            P = _poly_times_sparse(P, terms, L)
    P[~_degree_mask(N, L)] = 0
    nz = np.argwhere(P != 0)
    return {tuple(int(x) for x in b): P[tuple(b)] for b in nz}


class OperatorMatrix(NamedTuple):
    matrix: np.ndarray
    indices: np.ndarray
    #: Frobenius norm of the part of ``C_phi P_D`` that leaves degree ``<= D``.
    defect: float


def operator_matrix(symbol: Symbol, domain: Domain, D: int, with_defect: bool = False):
    """Matrix of ``P_D C_phi P_D`` in the orthonormalized monomial basis.

    ``M[beta, alpha] = coeff_beta(phi^alpha) ||e_beta|| / ||e_alpha||`` with
    rows and columns in graded lexicographic order.  With `with_defect`, an
    :class:`OperatorMatrix` is returned that also carries
    ``||(I - P_D) C_phi P_D||_F`` computed from the full expansion.
    """
    if symbol.N != domain.N:
        raise ValueError("symbol and domain dimensions differ")
    r = symbol.range_radius(domain)
    if r >= 1:
        raise SymbolError(f"range radius bound {r:.6g} in {domain.tag} is not below 1")
    idx = lattice.index_array(domain.N, D)
    n = len(idx)
    _check_budget(n * n)
    log_norm = 0.5 * monomial_log_norm_sq(domain, idx)
    if isinstance(symbol, DiagonalSymbol):
        logr = np.log(np.array(symbol.radii))
        M = np.diag(np.exp(idx @ logr))
        return OperatorMatrix(M, idx, 0.0) if with_defect else M

    N = domain.N
    L = D * max(symbol.degree, 1) if with_defect else D
    _check_budget((L + 1) ** N * max(1, n // max(1, D)))
    dtype = float if symbol.is_real else complex
    terms = [[(g, c.real if dtype is float else c) for g, c in comp] for comp in symbol.terms]
    pos = {tuple(a): k for k, a in enumerate(idx.tolist())}
    mask_D = _degree_mask(N, L)
    inside = np.indices((L + 1,) * N).sum(axis=0) <= D
    # dense row positions for all multi-indices of degree <= D
    flat_rows = np.array([np.ravel_multi_index(tuple(a), (L + 1,) * N) for a in idx])
    M = np.zeros((n, n), dtype=dtype)
    defect_sq = 0.0
    cols: dict = {}
    # columns of a given degree only depend on those of the previous degree
    for k, a in enumerate(idx.tolist()):
        a = tuple(a)
        if sum(a) == 0:
            P = np.zeros((L + 1,) * N, dtype=dtype)
            P[(0,) * N] = 1.0
        else:
            i = max(j for j, x in enumerate(a) if x > 0)
            prev = a[:i] + (a[i] - 1,) + a[i + 1:]
            P = _poly_times_sparse(cols[prev], terms[i], L)
        cols[a] = P
        flat = P.ravel()
        M[:, k] = flat[flat_rows] * np.exp(log_norm - log_norm[k])
        if with_defect:
            outside = mask_D & ~inside
            nz = np.argwhere(outside & (P != 0))
            if len(nz):
                lb = 0.5 * monomial_log_norm_sq(domain, nz)
                defect_sq += float(np.sum(np.abs(P[tuple(nz.T)]) ** 2 * np.exp(2 * (lb - log_norm[k]))))
        # drop columns two degrees back
        if sum(a) >= 2:
            for old in [b for b in cols if sum(b) < sum(a) - 1]:
                del cols[old]
    if with_defect:
        return OperatorMatrix(M, idx, math.sqrt(defect_sq))
    return M


# -- spectra -----------------------------------------------------------------

@dataclass
class SingularSpectrum:
    """Nonincreasing approximation numbers with a truncation certificate.

    ``log_values`` is kept alongside `values` so that enumerated spectra far
    below the float range still carry usable magnitudes.
    """

    values: np.ndarray
    truncation_degree: int | None
    tail_certificate: float
    N: int
    log_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or np.any(np.diff(v) > 0):
            raise ValueError("singular values must be non-negative and nonincreasing")
        self.values = v
        if self.log_values is None:
            with np.errstate(divide="ignore"):
                self.log_values = np.log(v)

    def __len__(self):
        return len(self.values)

    @property
    def lower(self) -> np.ndarray:
        return self.values

    @property
    def upper(self) -> np.ndarray:
        return self.values + self.tail_certificate

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "a_n", "lower", "upper"])
            for k, (a, lo, up) in enumerate(zip(self.values, self.lower, self.upper), 1):
                w.writerow([k, repr(float(a)), repr(float(lo)), repr(float(up))])


def exact_singular_values_diagonal(radii: Sequence[float], count: int,
                                   cap: int = lattice.COUNT_CAP) -> SingularSpectrum:
    """The `count` largest products ``prod r_j^alpha_j``, by threshold enumeration."""
    sym = DiagonalSymbol(tuple(radii))
    if count < 1:
        raise ValueError("count must be positive")
    if count > cap:
        raise lattice.LatticeCapError(f"count {count} exceeds enumeration cap {cap}")
    sigma = [-math.log(r) for r in sym.radii]
    N = len(sigma)
    A = (count * math.factorial(N) * math.prod(sigma)) ** (1 / N)
    while lattice.count_weighted(sigma, A, cap) < count:
        A *= 1.25
    _, w = lattice.enumerate_weighted(sigma, A, cap)
    logv = -np.sort(w, kind="stable")[:count]
    return SingularSpectrum(np.exp(logv), None, 0.0, N, log_values=logv)


def approximation_numbers(matrix: np.ndarray, tail: float = 0.0, N: int = 1,
                          truncation_degree: int | None = None) -> SingularSpectrum:
    """Singular values of `matrix`, nonincreasing, certified within ``[a_n, a_n + tail]``."""
    if tail < 0:
        raise ValueError("tail must be non-negative")
    M = np.asarray(matrix)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    try:
        s = scipy.linalg.svdvals(M)
    except np.linalg.LinAlgError:
        try:
            s = scipy.linalg.svdvals(M, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            fro = float(np.linalg.norm(M))
            raise np.linalg.LinAlgError(
                f"SVD did not converge for {M.shape} matrix (Frobenius norm {fro:.3e})") from exc
    s = np.sort(np.maximum(s, 0.0))[::-1]
    return SingularSpectrum(s, truncation_degree, float(tail), N)


# -- tails -------------------------------------------------------------------

def tail_constant_A(m: int) -> int:
    """``A_0 = 1``, ``A_m = m A_{m-1} + 1``."""
    A = 1
    for k in range(1, m + 1):
        A = k * A + 1
    return A


def geom_tail(m: int, l: int, x: float) -> tuple[float, float]:
    """``(sum_{p >= l} p^m x^p, A_m l^m x^l / (1-x)^(m+1))``."""
    if not 0 < x < 1 or l < 1 or m < 0:
        raise ValueError("need 0 < x < 1, l >= 1, m >= 0")
    bound = tail_constant_A(m) * l**m * x**l / (1 - x) ** (m + 1)
    if m == 0:
        exact = x**l / (1 - x)
    else:
        total, p = 0.0, l
        term = p**m * x**p
        while True:
            total += term
            p += 1
            term = p**m * x**p
            if term <= 1e-18 * total and p > m / -math.log(x):
                break
        exact = total
    return exact, bound


def default_reinhardt_constant(N: int, c: int) -> float:
    """Largest good-Reinhardt constant among the supported families in dimension N."""
    if c == 1:
        return max(_polydisk_constant(N), 2.0**N)
    return _polydisk_constant(N) * 2.0**N


def truncation_tail_bound(r0: float, l: int, N: int, c: int = 1, C: float | None = None) -> float:
    """``M (l+1)^((cN+1)/2) r0^l / (1 - r0^2)^((cN+1)/2)`` with ``M = sqrt(C A_{cN})``.

    Bounds ``||C_phi (f - f_l)||`` over the unit ball of H^2, where ``f_l`` is
    the degree-l Taylor section: by Cauchy-Schwarz each degree-p block of the
    remainder is at most ``sqrt(C p^{cN}) r0^p`` times its coefficient norm,
    and the geometric tail over ``p > l`` is summed with :func:`geom_tail`.
    """
    if not 0 < r0 < 1:
        raise ValueError("need 0 < r0 < 1")
    if l < 0:
        raise ValueError("l must be non-negative")
    if C is None:
        C = default_reinhardt_constant(N, c)
    e = (c * N + 1) / 2
    logb = (0.5 * math.log(C * tail_constant_A(c * N)) + e * math.log(l + 1)
            + l * math.log(r0) - e * math.log1p(-r0 * r0))
    return math.exp(logb)


def operator_tail(symbol: Symbol, domain: Domain, D: int) -> float:
    C, c = good_reinhardt_constants(domain)
    return truncation_tail_bound(symbol.range_radius(domain), D, domain.N, c, C)


def default_truncation_degree(symbol: Symbol, domain: Domain, a_target: float,
                              rtol: float = DEFAULT_CERT_RTOL) -> int:
    """Smallest D whose tail certificate is below ``rtol * a_target``."""
    C, c = good_reinhardt_constants(domain)
    r0 = symbol.range_radius(domain)
    for D in range(1, MAX_DEFAULT_DEGREE + 1):
        if truncation_tail_bound(r0, D, domain.N, c, C) < rtol * a_target:
            return D
    raise ValueError(f"no truncation degree up to {MAX_DEFAULT_DEGREE} certifies {a_target:.3g}")


def operator_spectrum(symbol: Symbol, domain: Domain | None = None, D: int | None = None,
                      a_target: float = 1e-3) -> SingularSpectrum:
    """Matrix, SVD and certificate in one call.

    For symbols that do not preserve degree, the certificate adds the
    Frobenius norm of the rows that leave degree ``<= D``.
    """
    domain = domain or Polydisk(symbol.N)
    if D is None:
        D = default_truncation_degree(symbol, domain, a_target)
    tail = operator_tail(symbol, domain, D)
    if symbol.degree_preserving:
        M = operator_matrix(symbol, domain, D)
    else:
        M, _, defect = operator_matrix(symbol, domain, D, with_defect=True)
        tail += defect
    return approximation_numbers(M, tail, domain.N, D)


# -- beta estimates ----------------------------------------------------------

class BetaEstimate(NamedTuple):
    n: np.ndarray
    b: np.ndarray
    beta_minus_seq: np.ndarray
    beta_plus_seq: np.ndarray
    #: ``exp(-kappa)`` from ``log a_{n^N} = -kappa n + d log n + e``
    extrapolated: float
    #: same without the ``log n`` term
    extrapolated_pure: float
    coef: tuple
    residual: float
    residual_pure: float


def beta_estimates(spectrum: SingularSpectrum, N: int, n_range: tuple[int, int],
                   fit_from: int | None = None) -> BetaEstimate:
    """``b_n = a_{n^N}^(1/n)`` over `n_range` (inclusive) and extrapolated limits.

    `beta_minus_seq` / `beta_plus_seq` are tail infima / suprema
    ``min_{m >= n} b_m`` and ``max_{m >= n} b_m`` within the range.  The fit
    uses ``n >= fit_from`` (default: the upper half of the range).
    """
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo < 1 or hi < lo:
        raise ValueError(f"bad n range {n_range}")
    need = hi**N
    if len(spectrum) < need:
        raise ValueError(f"spectrum has {len(spectrum)} values, need {need} for n <= {hi}")
    n = np.arange(lo, hi + 1)
    la = spectrum.log_values[n**N - 1]
    with np.errstate(over="ignore"):
        b = np.exp(la / n)
    bminus = np.minimum.accumulate(b[::-1])[::-1]
    bplus = np.maximum.accumulate(b[::-1])[::-1]
    if fit_from is None:
        fit_from = max(lo, (lo + hi) // 2) if hi - lo >= 6 else lo
    sel = (n >= fit_from) & np.isfinite(la)
    if not np.any(np.isfinite(la)):
        return BetaEstimate(n, b, bminus, bplus, 0.0, 0.0, (), 0.0, 0.0)
    if sel.sum() < 4:
        raise ValueError("need at least 4 finite points to fit")
    x, y = n[sel].astype(float), la[sel]
    X = np.c_[-x, np.log(x), np.ones_like(x)]
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = float(np.linalg.norm(X @ coef - y))
    Xp = np.c_[-x, np.ones_like(x)]
    cp, *_ = np.linalg.lstsq(Xp, y, rcond=None)
    res_p = float(np.linalg.norm(Xp @ cp - y))
    return BetaEstimate(n, b, bminus, bplus, float(np.exp(-coef[0])), float(np.exp(-cp[0])),
                        tuple(float(c) for c in coef), res, res_p)
