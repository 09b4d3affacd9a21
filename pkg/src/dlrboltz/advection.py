"""MUSCL / minmod finite-volume transport in x, dense and projected.

``Dm`` is the flux difference for a unit positive speed (reconstruction
from the left), ``Dp`` the one for a unit negative speed. Both act along
axis 0 on any number of columns and use two ghost cells.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .grid import SpatialGrid, VelocityGrid, ghost_fill


def minmod(a, b):
    """0 where ``a`` and ``b`` differ in sign, otherwise the smaller magnitude."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _padded_slopes(q, bc):
    P = ghost_fill(q, bc, 2)
    d = np.diff(P, axis=0)
    return P, minmod(d[:-1], d[1:])


def flux_difference_m(q, grid: SpatialGrid):
    """Upwind flux difference for positive speed (left-biased stencil)."""
    n = grid.n_x
    P, s = _padded_slopes(q, grid.bc)
    face = P[1 : n + 2] + 0.5 * s[0 : n + 1]
    return np.diff(face, axis=0) / grid.dx


def flux_difference_p(q, grid: SpatialGrid):
    """Upwind flux difference for negative speed (right-biased stencil)."""
    n = grid.n_x
    P, s = _padded_slopes(q, grid.bc)
    face = P[2 : n + 3] - 0.5 * s[1 : n + 2]
    return np.diff(face, axis=0) / grid.dx


def check_cfl(speed_max: float, dt: float, grid: SpatialGrid) -> float:
    cfl = speed_max * dt / grid.dx
    if cfl > 1.0 + 1e-12:
        raise ConfigError(f"CFL number {cfl:.3f} exceeds 1", "dt")
    return cfl


def upwind_update(q, speeds, dt, grid: SpatialGrid):
    """One forward-Euler step of ``q_t + c q_x = 0`` per column with speed ``c``."""
    speeds = np.asarray(speeds, dtype=float)
    check_cfl(float(np.max(np.abs(speeds), initial=0.0)), dt, grid)
    pos = np.maximum(speeds, 0.0)
    neg = np.minimum(speeds, 0.0)
    out = q.copy()
    if np.any(pos):
        out -= dt * pos * flux_difference_m(q, grid)
    if np.any(neg):
        out -= dt * neg * flux_difference_p(q, grid)
    return out


def muscl_transport_full(f, dt, xgrid: SpatialGrid, vgrid: VelocityGrid):
    """Transport step ``f* = f - dt v1 d_x f`` for dense ``(n_x, n_v^d_v)`` samples."""
    return upwind_update(np.asarray(f, dtype=float), vgrid.v1, dt, xgrid)


def coefficient_matrix_v(V, vgrid: VelocityGrid, axis: int = 0):
    """``A[j, l] = <v_axis V_j V_l>_v``, symmetrized to roundoff."""
    A = (V * vgrid.component(axis)[:, None]).T @ V * vgrid.weight
    return 0.5 * (A + A.T)


def upwind_coefficient_matrices(V, vgrid: VelocityGrid, axis: int = 0):
    """``(<v+ V_j V_l>_v, <v- V_j V_l>_v)`` with ``v+ = max(v, 0)``, ``v- = min(v, 0)``.

    These are the Galerkin projections of the node-wise upwind splitting, so
    a step built on them is the exact projection of the per-node update.
    """
    v = vgrid.component(axis)
    out = []
    for part in (np.maximum(v, 0.0), np.minimum(v, 0.0)):
        A = (V * part[:, None]).T @ V * vgrid.weight
        out.append(0.5 * (A + A.T))
    return tuple(out)


def split_symmetric(A):
    """Eigen-split ``A = Q diag(lam) Q^T`` and its positive / negative parts."""
    lam, Q = np.linalg.eigh(A)
    Ap = (Q * np.maximum(lam, 0.0)) @ Q.T
    Am = (Q * np.minimum(lam, 0.0)) @ Q.T
    return lam, Q, Ap, Am


def projected_K_transport(K, A, dt, grid: SpatialGrid):
    """``K - dt d_x K A`` upwinded along the characteristics of symmetric ``A``."""
    lam, Q = np.linalg.eigh(A)
    W = K @ Q
    return upwind_update(W, lam, dt, grid) @ Q.T


def projected_x_derivative(X, grid: SpatialGrid, conservative: bool = False):
    """``(M+, M-)`` with ``M+[i, k] = <X_i, Dm X_k>_x`` and ``M-[i, k] = <X_i, Dp X_k>_x``.

    The flux differences telescope, so ``<1, Dm q>_x = 0`` for periodic data.
    The Galerkin matrices only inherit this when the constant function lies
    in the span of ``X``. With ``conservative=True`` the component along
    ``c = <X_i, 1>_x`` is removed from both matrices, ``c^T M = 0``, which
    keeps transport steps built on them mass conserving. The change is a
    no-op when the constant function is already in the span.
    """
    Mp = X.T @ flux_difference_m(X, grid) * grid.dx
    Mm = X.T @ flux_difference_p(X, grid) * grid.dx
    if conservative:
        c = X.sum(axis=0) * grid.dx
        cc = c @ c
        if cc > 0.0:
            Mp = Mp - np.outer(c, c @ Mp) / cc
            Mm = Mm - np.outer(c, c @ Mm) / cc
    return Mp, Mm
