"""Capacity values, closed forms and the product rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

PROVENANCES = ("closed_form", "product_rule", "grid_1d", "toric_2d", "upper_bound_only", "support_oracle")


@dataclass(frozen=True)
class CapacityValue:
    """A Monge-Ampere capacity in dimension `N`.

    ``cap == math.inf`` is the explicit infinite sentinel; construct it with
    :meth:`infinite` rather than by overflowing a float.
    """

    cap: float
    N: int
    provenance: str
    error_bar: float = 0.0
    details: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.N < 1:
            raise ValueError("dimension must be positive")
        if math.isnan(self.cap) or self.cap < 0:
            raise ValueError(f"capacity must be non-negative, got {self.cap}")

    @classmethod
    def infinite(cls, N: int, provenance: str = "closed_form") -> "CapacityValue":
        return cls(math.inf, N, provenance)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.cap)

    @property
    def tau(self) -> float:
        return self.cap / (2 * math.pi) ** self.N

    @property
    def gamma(self) -> float:
        return gamma_N(self)


def gamma_N(cap: CapacityValue | float, N: int | None = None) -> float:
    """``exp(-2 pi (N!/cap)^(1/N))``, with value 1 at infinite capacity and 0 at zero."""
    if isinstance(cap, CapacityValue):
        N, c = cap.N, cap.cap
    else:
        if N is None:
            raise TypeError("N is required for a bare capacity number")
        c = float(cap)
    if c < 0 or math.isnan(c):
        raise ValueError("capacity must be non-negative")
    if math.isinf(c):
        return 1.0
    if c == 0:
        return 0.0
    return math.exp(-2 * math.pi * math.exp((math.lgamma(N + 1) - math.log(c)) / N))


def rate_from_capacity(cap: CapacityValue) -> float:
    """The exponent ``2 pi (N!/cap)^(1/N)``, i.e. ``-log gamma_N``."""
    if cap.is_infinite:
        return 0.0
    if cap.cap == 0:
        return math.inf
    return 2 * math.pi * math.exp((math.lgamma(cap.N + 1) - math.log(cap.cap)) / cap.N)


def capacity_sublevel(N: int, s: float) -> CapacityValue:
    """Capacity of ``{j <= s}`` in any of the supported domains: ``(2 pi / log(1/s))^N``.

    The domain enters only through its dimension, since the relative extremal
    function is ``max(log j / log(1/s), -1)`` and ``(dd^c log j)^N`` has mass
    ``(2 pi)^N`` at the origin.
    """
    if hasattr(N, "N"):
        N = N.N
    if not 0 < s < 1:
        raise ValueError(f"need 0 < s < 1, got {s}")
    L = -math.log(s)
    if L == 0.0:
        return CapacityValue.infinite(N)
    return CapacityValue((2 * math.pi / L) ** N, N, "closed_form")


def capacity_product(factors: Sequence[CapacityValue]) -> CapacityValue:
    """Capacity of a product of compacts in a product of domains (Blocki's rule)."""
    factors = list(factors)
    if not factors:
        raise ValueError("need at least one factor")
    if len(factors) == 1:
        return factors[0]
    N = sum(f.N for f in factors)
    has_inf = any(f.is_infinite for f in factors)
    has_zero = any(f.cap == 0 for f in factors)
    if has_inf and has_zero:
        raise ValueError("product of zero and infinite capacity is undefined")
    if has_inf:
        return CapacityValue.infinite(N, "product_rule")
    if has_zero:
        return CapacityValue(0.0, N, "product_rule")
    cap = math.prod(f.cap for f in factors)
    rel = math.sqrt(sum((f.error_bar / f.cap) ** 2 for f in factors))
    return CapacityValue(cap, N, "product_rule", error_bar=cap * rel)


def capacity_disk_1d(center: complex, radius: float) -> CapacityValue:
    """Green capacity of a closed Euclidean disk inside the unit disk.

    The disk is a pseudo-hyperbolic disk; a disk automorphism moves it to a
    concentric disk of radius `s` and the capacity is ``2 pi / log(1/s)``.
    """
    a = abs(complex(center))
    if radius <= 0 or a + radius >= 1:
        raise ValueError("disk must lie inside the unit disk")
    # endpoints on the ray through the center: x1 = a - radius, x2 = a + radius;
    # the pseudo-hyperbolic center c and radius s satisfy m_c(x1) = -s, m_c(x2) = s
    x1, x2 = a - radius, a + radius
    # solving (x1 - c)/(1 - c x1) = -(x2 - c)/(1 - c x2) gives a quadratic in c
    qa = x1 + x2
    qb = -2 * (1 + x1 * x2)
    qc = x1 + x2
    if abs(qa) < 1e-15:
        c = 0.0
    else:
        disc = math.sqrt(qb * qb - 4 * qa * qc)
        c = (-qb - disc) / (2 * qa)
    s = (x2 - c) / (1 - c * x2)
    return CapacityValue(2 * math.pi / -math.log(s), 1, "closed_form", details={"pseudo_radius": s})


def ball_capacity_constant(N: int) -> float:
    """``4^N N! vol(B_N)`` with ``vol(B_N) = pi^N / N!`` in real dimension 2N."""
    return (4 * math.pi) ** N


def capacity_upper_bound_ball(dist: float, N: int) -> CapacityValue:
    """Upper bound ``C_N / dist^N`` for a compact at distance `dist` from the sphere."""
    if dist <= 0:
        raise ValueError("compact must be at positive distance from the sphere")
    if dist > 1:
        raise ValueError("distance to the unit sphere cannot exceed 1")
    return CapacityValue(ball_capacity_constant(N) / dist**N, N, "upper_bound_only")
