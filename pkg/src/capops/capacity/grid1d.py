"""Green capacity of planar compacts in the unit disk on a polar grid.

The grid has a node at the origin and rings ``r_i = i/R`` for ``i = 1..R``;
ring ``R`` is the unit circle where the extremal function vanishes.  The
5-point Laplacian is written in finite-volume form, so the sum of the
discrete Laplacian over the nodes of K is exactly the flux leaving K, which
is the capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from capops.capacity.values import CapacityValue

DEFAULT_TOL = 1e-9
DEFAULT_MAX_SWEEPS = 100_000
MAX_THETA = 512


class GridSolverError(RuntimeError):
    """The relaxation did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float, sweeps: int):
        super().__init__(f"{message} (residual {residual:.3e} after {sweeps} sweeps)")
        self.residual = residual
        self.sweeps = sweeps


@dataclass
class ExtremalGridField:
    """Grid samples of the relative extremal function."""

    coords: tuple[np.ndarray, ...]
    values: np.ndarray
    geometry: str


class PolarProblem:
    """Discrete problem ``u = -1`` on K, ``u = 0`` on the circle, harmonic elsewhere."""

    def __init__(self, region, resolution: int, n_theta: int | None = None):
        if resolution < 4:
            raise ValueError("resolution must be at least 4")
        R = int(resolution)
        nth = int(n_theta) if n_theta else min(R, MAX_THETA)
        self.R, self.n_theta = R, nth
        h, dth = 1.0 / R, 2 * math.pi / nth
        self.r = np.arange(R + 1) * h
        self.theta = np.arange(nth) * dth
        n = 1 + (R - 1) * nth
        self.n = n

        ri = np.repeat(np.arange(1, R), nth)
        tj = np.tile(np.arange(nth), R - 1)
        k = 1 + (ri - 1) * nth + tj
        rr = ri * h
        w_out = (rr + h / 2) * dth / h
        w_in = (rr - h / 2) * dth / h
        w_th = h / (rr * dth)

        def idx(i, j):
            return 1 + (i - 1) * nth + (j % nth)

        rows, cols, vals = [k], [k], [-(w_out + w_in + 2 * w_th)]
        m = ri + 1 < R
        rows.append(k[m]); cols.append(idx(ri[m] + 1, tj[m])); vals.append(w_out[m])
        m = ri > 1
        rows.append(k[m]); cols.append(idx(ri[m] - 1, tj[m])); vals.append(w_in[m])
        m = ri == 1
        rows.append(k[m]); cols.append(np.zeros(m.sum(), dtype=int)); vals.append(w_in[m])
        rows += [k, k]; cols += [idx(ri, tj + 1), idx(ri, tj - 1)]; vals += [w_th, w_th]
        # origin cell: disk of radius h/2 exchanging flux with every ring-1 node
        w0 = 0.5 * dth
        ring1 = idx(np.ones(nth, dtype=int), np.arange(nth))
        rows += [np.zeros(nth, dtype=int), np.array([0])]
        cols += [ring1, np.array([0])]
        vals += [np.full(nth, w0), np.array([-nth * w0])]
        self.A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(n, n))
        # flux through the unit circle from the last interior ring
        self._outer_nodes = idx(np.full(nth, R - 1), np.arange(nth))
        self._outer_w = (1 - h / 2) * dth / h

        z = np.concatenate([[0j], (rr * np.exp(1j * self.theta[tj]))])
        if isinstance(region, np.ndarray):
            if region.shape != (R + 1, nth):
                raise ValueError(f"mask shape {region.shape} does not match grid {(R + 1, nth)}")
            inK = np.concatenate([[region[0].any()], region[1:R].ravel()])
            if region[R].any():
                raise ValueError("K touches the unit circle")
        else:
            inK = np.asarray(region.contains(z), dtype=bool)
        self.inK = inK
        if not inK.any():
            raise ValueError("K has no grid nodes at this resolution")
        ring = np.concatenate([[0], ri])
        if ring[inK].max() > R - 2:
            raise ValueError("K must stay at least two grid cells inside the unit circle")
        self._z = z

    def subsolution(self) -> np.ndarray:
        return -np.ones(self.n)

    def solve_direct(self) -> np.ndarray:
        u = np.zeros(self.n)
        fixed, free = self.inK, ~self.inK
        u[fixed] = -1.0
        Aff = self.A[free][:, free].tocsc()
        rhs = -(self.A[free][:, fixed] @ u[fixed])
        u[free] = spla.spsolve(Aff, rhs)
        return np.maximum(u, -1.0)

    def relax(self, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS,
              callback=None) -> np.ndarray:
        """Projected Jacobi sweeps from the subsolution ``u = -1``.

        Iterates increase pointwise.  Raises :class:`GridSolverError` if the
        sup-norm update is still above `tol` after `max_sweeps`.
        """
        diag = self.A.diagonal()
        off = self.A - sp.diags(diag)
        free = ~self.inK
        u = self.subsolution()
        upd = math.inf
        for sweep in range(1, max_sweeps + 1):
            new = u.copy()
            new[free] = np.maximum(-(off @ u)[free] / diag[free], -1.0)
            upd = float(np.abs(new - u).max())
            u = new
            if callback is not None:
                callback(sweep, u)
            if upd < tol:
                return u
        raise GridSolverError("relaxation did not converge", upd, max_sweeps)

    def capacity(self, u: np.ndarray) -> float:
        lap = self.A @ u
        return float(lap[self.inK].sum())

    def outer_flux(self, u: np.ndarray) -> float:
        return float(-(self._outer_w * u[self._outer_nodes]).sum())

    def field(self, u: np.ndarray) -> ExtremalGridField:
        vals = np.zeros((self.R + 1, self.n_theta))
        vals[0] = u[0]
        vals[1:self.R] = u[1:].reshape(self.R - 1, self.n_theta)
        return ExtremalGridField((self.r, self.theta), vals, "polar")


def green_capacity_grid_1d(region, resolution: int, n_theta: int | None = None,
                           method: str = "direct", richardson: bool = True,
                           tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS
                           ) -> CapacityValue:
    """Green capacity of `region` relative to the unit disk.

    `region` is anything with a vectorized ``contains(z)`` (see
    :mod:`capops.capacity.regions`) or a boolean ``(R+1, n_theta)`` mask on the
    polar grid.  With `richardson`, the problem is also solved at half
    resolution and the error bar is ``|c_R - c_{R/2}| / 3`` (second order).
    """
    if method not in ("direct", "relax"):
        raise ValueError(f"unknown method {method!r}")

    def run(R, nth):
        prob = PolarProblem(region, R, nth)
        u = prob.solve_direct() if method == "direct" else prob.relax(tol, max_sweeps)
        return prob, u

    prob, u = run(resolution, n_theta)
    cap = prob.capacity(u)
    details = {"field": prob.field(u), "outer_flux": prob.outer_flux(u),
               "resolution": resolution, "n_theta": prob.n_theta, "method": method}
    err = 0.0
    if richardson and not isinstance(region, np.ndarray) and resolution >= 16:
        prob_c, u_c = run(resolution // 2, max(8, prob.n_theta // 2))
        coarse = prob_c.capacity(u_c)
        details["coarse"] = coarse
        err = abs(cap - coarse) / 3
    return CapacityValue(cap, 1, "grid_1d", error_bar=err, details=details)
