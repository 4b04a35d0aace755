"""Monge-Ampere capacity of Reinhardt compacts in the bidisk.

A compact ``K`` in the unit bidisk that is invariant under the torus action is
described by its log-modulus image ``K_log`` in the negative quadrant.  The
relative extremal function is then ``v(log|z_1|, log|z_2|)`` where ``v`` is the
largest convex, coordinatewise nondecreasing function on the quadrant with
``v <= 0`` and ``v <= -1`` on ``K_log``.  The capacity equals
``(2 pi)^2 * 2! * |grad v(quadrant)|``: the area of the gradient image, which
is the real Monge-Ampere (Alexandrov) mass of ``v``.

The normalization is checked against the closed form for the bidisk of radius
1/2 before any toric result is returned.
"""

from __future__ import annotations

import math
from collections import defaultdict
from math import gcd

import numpy as np
from scipy.integrate import quad
from scipy.spatial import ConvexHull, QhullError

from capops.capacity.values import CapacityValue, capacity_sublevel

NORMALIZATION = (2 * math.pi) ** 2 * math.factorial(2)
CALIBRATION_S = 0.5
CALIBRATION_RTOL = 0.03
# nodes this many cells from the artificial left/bottom edges must carry no mass
TRUNCATION_MARGIN = 2


class ToricCalibrationError(RuntimeError):
    """The bidisk calibration did not reproduce the closed form."""


class ToricTruncationError(ValueError):
    """The truncated quadrant is too small: the envelope feels its artificial edge."""


def _directions(k: int) -> list[tuple[int, int]]:
    out = []
    for p in range(k + 1):
        for q in range(-k, k + 1):
            if (p == 0 and q <= 0) or gcd(p, abs(q)) != 1:
                continue
            out.append((p, q))
    return out


def _line_lower_envelope(y: np.ndarray) -> np.ndarray:
    """Lower convex envelope of equispaced samples (monotone chain)."""
    m = len(y)
    if m < 3:
        return y.copy()
    hull = []
    for k in range(m):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            if (y[i1] - y[i0]) * (k - i1) >= (y[k] - y[i1]) * (i1 - i0):
                hull.pop()
            else:
                break
        hull.append(k)
    out = np.empty(m)
    for i0, i1 in zip(hull[:-1], hull[1:]):
        t = np.arange(i1 - i0) / (i1 - i0)
        out[i0:i1] = y[i0] * (1 - t) + y[i1] * t
    out[hull[-1]] = y[hull[-1]]
    return out


def _line_orders(shape, dirs):
    n1, n2 = shape
    A, B = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    res = []
    for p, q in dirs:
        key = (q * A - p * B).ravel()
        pos = (p * A + q * B).ravel()
        order = np.lexsort((pos, key))
        breaks = np.flatnonzero(np.diff(key[order])) + 1
        res.append((order, np.concatenate([[0], breaks, [n1 * n2]])))
    return res


def _axis(T: float, anchor: float, h0: float) -> np.ndarray:
    # node spacing chosen so `anchor` (and 0) are nodes
    k = max(1, round(-anchor / h0))
    h = -anchor / k
    m = int(math.ceil(T / h - 1e-9))
    return -h * np.arange(m, -1, -1)


def _clip_positive(poly: np.ndarray) -> float:
    """Area of a convex polygon intersected with the closed positive quadrant."""
    P = poly
    for axis in (0, 1):
        if len(P) < 3:
            return 0.0
        out = []
        for i in range(len(P)):
            a, b = P[i], P[(i + 1) % len(P)]
            fa, fb = a[axis], b[axis]
            if fa >= 0:
                out.append(a)
            if (fa < 0 < fb) or (fb < 0 < fa):
                out.append(a + fa / (fa - fb) * (b - a))
        P = np.array(out)
    if len(P) < 3:
        return 0.0
    x, y = P[:, 0], P[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def envelope(mask: np.ndarray, directions: int = 1, max_sweeps: int = 50,
             tol: float = 1e-13, callback=None) -> np.ndarray:
    """Grid envelope: nondecreasing, convex along lattice lines, ``<= -1`` on `mask`.

    Starts from the obstacle itself (down-set closure of `mask` at -1, else 0)
    and alternates lower convex envelopes along lattice directions with
    running minima toward the upper-right corner.  Iterates decrease.
    """
    down = np.logical_or.accumulate(mask[::-1, ::-1], axis=0)
    down = np.logical_or.accumulate(down, axis=1)[::-1, ::-1]
    v = np.where(down, -1.0, 0.0)
    orders = _line_orders(v.shape, _directions(directions))
    for sweep in range(max_sweeps):
        old = v.copy()
        for order, offs in orders:
            flat = v.ravel()[order]
            env = np.concatenate([_line_lower_envelope(flat[a:b])
                                  for a, b in zip(offs[:-1], offs[1:])])
            v.ravel()[order] = np.minimum(flat, env)
        v = np.minimum.accumulate(v[::-1, :], axis=0)[::-1, :]
        v = np.minimum.accumulate(v[:, ::-1], axis=1)[:, ::-1]
        if callback is not None:
            callback(sweep, v)
        if np.abs(old - v).max() < tol:
            break
    return v


def alexandrov_cells(X1: np.ndarray, X2: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Gradient-image area attached to each interior node.

    The lower convex hull of the lifted nodes is computed once; the cell of a
    hull vertex is the convex hull of the gradients of its incident facets,
    clipped to the nondecreasing cone ``y >= 0``.
    """
    pts = np.c_[X1.ravel(), X2.ravel(), v.ravel()]
    hull = ConvexHull(pts, qhull_options="Qt")
    eq = hull.equations
    low = eq[:, 2] < -1e-12
    grads = -eq[low, :2] / eq[low, 2:3]
    inc = defaultdict(list)
    for f, simplex in enumerate(hull.simplices[low]):
        for vtx in simplex:
            inc[vtx].append(f)
    n1, n2 = v.shape
    cells = np.zeros(n1 * n2)
    for vtx, fs in inc.items():
        i, j = divmod(int(vtx), n2)
        if i in (0, n1 - 1) or j in (0, n2 - 1):
            continue
        G = np.unique(np.round(grads[fs], 12), axis=0)
        if len(G) < 3:
            continue
        try:
            ch = ConvexHull(G)
        except QhullError:
            continue  # collinear gradients: zero area
        cells[vtx] = _clip_positive(G[ch.vertices])
    return cells.reshape(v.shape)


def _solve(region, truncation: float, resolution: int, directions: int):
    if truncation <= 0 or resolution < 2:
        raise ValueError("truncation and resolution must be positive")
    up = region.upper
    if max(up) >= 0:
        raise ValueError("K_log must stay inside the open negative quadrant")
    anchor = getattr(region, "anchor", None) or up
    h0 = 1.0 / resolution
    x1 = _axis(truncation, anchor[0], h0)
    x2 = _axis(truncation, anchor[1], h0)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    mask = region.contains(X1, X2)
    if not mask.any():
        raise ValueError("K_log has no grid nodes at this resolution")
    v = envelope(mask, directions)
    cells = alexandrov_cells(X1, X2, v)
    m = TRUNCATION_MARGIN + 1
    edge = np.zeros_like(cells, dtype=bool)
    edge[:m, :] = True
    edge[:, :m] = True
    leak = float(cells[edge].sum())
    total = float(cells.sum())
    if total > 0 and leak > 1e-12 * total:
        raise ToricTruncationError(
            f"envelope carries mass {leak:.3e} (of {total:.3e}) within {TRUNCATION_MARGIN} cells "
            f"of the artificial edge at -{truncation}; increase truncation")
    return NORMALIZATION * total, (X1, X2, v, cells)


_calibrated: dict = {}


def calibrate(truncation: float = 4.0, resolution: int = 40, directions: int = 1) -> float:
    """Relative error of the solver on the bidisk ``{max |z_j| <= 1/2}``.

    Raises :class:`ToricCalibrationError` above ``CALIBRATION_RTOL``; results
    are cached per grid setting.
    """
    from capops.capacity.regions import LogSublevel

    key = (truncation, resolution, directions)
    if key not in _calibrated:
        exact = capacity_sublevel(2, CALIBRATION_S).cap
        got, _ = _solve(LogSublevel(CALIBRATION_S), truncation, resolution, directions)
        _calibrated[key] = got / exact - 1
    err = _calibrated[key]
    if not abs(err) <= CALIBRATION_RTOL:
        raise ToricCalibrationError(
            f"bidisk calibration off by {err:+.3%} (normalization {NORMALIZATION:.6g}); "
            "toric results are not trusted")
    return err


def capacity_toric_2d(K_log, truncation: float = 4.0, resolution: int = 40,
                      directions: int = 1, verify_calibration: bool = True) -> CapacityValue:
    """Capacity of the Reinhardt compact with log-modulus image `K_log`.

    Parameters
    ----------
    K_log : region
        Object with ``contains(x1, x2)`` and ``upper`` (see
        :mod:`capops.capacity.regions`).  Only its down-set closure matters.
    truncation : float
        The quadrant is truncated to ``[-truncation, 0]^2``.
    resolution : int
        Nodes per unit log-modulus length (grid axes are snapped so the
        region's corner is a node).
    directions : int
        Lattice directions ``(p, q)`` with ``|p|, |q| <= directions`` used by
        the line-convexity relaxation.

    Returns
    -------
    CapacityValue
        Provenance ``toric_2d``; the error bar is the calibration error at the
        same grid setting.
    """
    calib = calibrate(truncation, resolution, directions) if verify_calibration else math.nan
    cap, (X1, X2, v, cells) = _solve(K_log, truncation, resolution, directions)
    from capops.capacity.grid1d import ExtremalGridField

    field = ExtremalGridField((X1[:, 0], X2[0]), v, "log-modulus")
    err = abs(calib) * cap if verify_calibration else 0.0
    return CapacityValue(cap, 2, "toric_2d", error_bar=err,
                         details={"field": field, "cells": cells, "calibration_error": calib,
                                  "truncation": truncation, "resolution": resolution})


def capacity_toric_support(K_log) -> CapacityValue:
    """Independent oracle from the support function of the convex hull of ``K_log``.

    The gradient image of ``v`` is the region of the positive quadrant under
    the curve ``{w : h(w) = -1}`` with ``h(w) = max_{x in K} w.x``; in polar
    coordinates its area is ``(1/2) int_0^{pi/2} h(omega)^{-2} d theta``.
    Requires ``K_log.support``.
    """
    def f(th):
        h = float(K_log.support(np.array([[math.cos(th), math.sin(th)]]))[0])
        return 0.5 / (h * h)

    # support functions of boxes and unions are piecewise smooth; split at kinks
    area, _ = quad(f, 0, math.pi / 2, limit=200, epsabs=0, epsrel=1e-12)
    return CapacityValue(NORMALIZATION * area, 2, "support_oracle")
