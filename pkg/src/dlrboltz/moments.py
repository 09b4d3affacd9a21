"""Macroscopic moments and Maxwellians for dense and low-rank states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError
from .grid import VelocityGrid
from .lowrank import LowRankState

RHO_FLOOR = 1e-14


@dataclass(frozen=True)
class MacroFields:
    """Per-cell density, bulk velocity ``(n_x, d_v)``, temperature and total energy.

    ``degenerate`` flags cells with ``rho <= 1e-14``; those report ``u = 0``
    and ``T = 0``.
    """

    rho: np.ndarray
    u: np.ndarray
    T: np.ndarray
    E: np.ndarray
    degenerate: np.ndarray

    @property
    def d_v(self) -> int:
        return self.u.shape[1]

    @property
    def momentum(self) -> np.ndarray:
        return self.rho[:, None] * self.u

    def is_physical(self) -> bool:
        return bool(np.all(self.rho > 0) and np.all(self.T > 0) and not self.degenerate.any())


def _assemble(rho, mom, second_central, d_v):
    degenerate = rho <= RHO_FLOOR
    safe = np.where(degenerate, 1.0, rho)
    u = np.where(degenerate[:, None], 0.0, mom / safe[:, None])
    T = np.where(degenerate, 0.0, second_central / (d_v * safe))
    E = 0.5 * d_v * rho * T + 0.5 * rho * np.sum(u**2, axis=1)
    return MacroFields(rho, u, T, E, degenerate)


def compute_moments_full(f, vgrid: VelocityGrid) -> MacroFields:
    """Moments of dense samples ``f`` with shape ``(n_x, n_v^d_v)``."""
    f = np.atleast_2d(np.asarray(f, dtype=float))
    if f.shape[1] != vgrid.size:
        raise ContractError(f"field has {f.shape[1]} velocity samples, grid has {vgrid.size}")
    w = vgrid.weight
    comps = np.stack([vgrid.component(a) for a in range(vgrid.d_v)], axis=1)
    rho = f.sum(axis=1) * w
    mom = f @ comps * w
    degenerate = rho <= RHO_FLOOR
    u = np.where(degenerate[:, None], 0.0, mom / np.where(degenerate, 1.0, rho)[:, None])
    # u-centred second moment avoids cancellation at small T
    c2 = np.einsum("xk,xk->x", f, ((comps[None, :, :] - u[:, None, :]) ** 2).sum(-1)) * w
    return _assemble(rho, mom, c2, vgrid.d_v)


def velocity_moments_of_basis(V, vgrid: VelocityGrid):
    """``<V_j>``, ``<v_a V_j>`` and ``<|v|^2 V_j>`` for the columns of ``V``."""
    w = vgrid.weight
    m0 = V.sum(axis=0) * w
    m1 = np.stack([vgrid.component(a) @ V * w for a in range(vgrid.d_v)], axis=1)
    m2 = vgrid.speed_sq @ V * w
    return m0, m1, m2


def compute_moments_lowrank(state: LowRankState) -> MacroFields:
    """Moments straight from the factors, O(r (n_x + n_v^d_v))."""
    K = state.K
    m0, m1, m2 = velocity_moments_of_basis(state.V, state.vgrid)
    rho = K @ m0
    mom = K @ m1
    degenerate = rho <= RHO_FLOOR
    u = np.where(degenerate[:, None], 0.0, mom / np.where(degenerate, 1.0, rho)[:, None])
    # int f |v - u|^2 = int f |v|^2 - 2 u . int f v + |u|^2 rho
    c2 = K @ m2 - 2.0 * np.sum(u * mom, axis=1) + np.sum(u**2, axis=1) * rho
    return _assemble(rho, mom, c2, state.vgrid.d_v)


def maxwellian(rho, u, T, vgrid: VelocityGrid) -> np.ndarray:
    """``rho / (2 pi T)^(d_v/2) exp(-|v - u|^2 / (2 T))`` sampled per cell."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    u = np.asarray(u, dtype=float).reshape(rho.size, vgrid.d_v)
    if np.any(rho <= 0) or np.any(T <= 0):
        raise DomainError("Maxwellian needs rho > 0 and T > 0 in every cell")
    d2 = sum((vgrid.component(a)[None, :] - u[:, a, None]) ** 2 for a in range(vgrid.d_v))
    return (rho / (2 * np.pi * T) ** (vgrid.d_v / 2))[:, None] * np.exp(-d2 / (2 * T[:, None]))


def maxwellian_2v(m: MacroFields, vgrid: VelocityGrid) -> np.ndarray:
    if vgrid.d_v != 2:
        raise ContractError("maxwellian_2v needs a 2D velocity grid")
    return maxwellian(m.rho, m.u, m.T, vgrid)


def bgk_profiles(vgrid: VelocityGrid) -> np.ndarray:
    """The three fixed velocity profiles of the simplified 1D Maxwellian.

    Columns: ``h``, ``v h`` and ``(v^2 - 1) h / 2`` with ``h`` the unit Gaussian.
    """
    if vgrid.d_v != 1:
        raise ContractError("the simplified Maxwellian lives on a 1D velocity grid")
    v = vgrid.nodes
    h = np.exp(-0.5 * v**2) / np.sqrt(2 * np.pi)
    return np.stack([h, v * h, 0.5 * (v**2 - 1.0) * h], axis=1)


def bgk_coefficients(rho, u) -> np.ndarray:
    """Spatial coefficient fields ``(rho, rho u, rho u^2)`` pairing with :func:`bgk_profiles`."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    return np.stack([rho, rho * u, rho * u**2], axis=1)


def maxwellian_bgk_1v(rho, u, vgrid: VelocityGrid) -> np.ndarray:
    """``rho exp(-v^2/2)/sqrt(2 pi) (1 + v u + (v^2 - 1) u^2 / 2)`` per cell."""
    return bgk_coefficients(np.atleast_1d(rho), np.atleast_1d(u)) @ bgk_profiles(vgrid).T


def bgk_density_velocity(f, vgrid: VelocityGrid):
    """``(rho, u)`` of dense 1D samples, as used by the simplified Maxwellian."""
    m = compute_moments_full(f, vgrid)
    return m.rho, m.u[:, 0]


BKW_RATE = 1.0 / 8.0


def _bkw_shape(t, rate):
    decay = np.exp(-rate * t)
    return 1.0 - 0.5 * decay, 0.5 * rate * decay


def bkw_profile(vgrid: VelocityGrid, t: float, rate: float = BKW_RATE) -> np.ndarray:
    """Exact homogeneous solution for the 2D constant kernel (unit mass, zero mean).

    ``f = exp(-|v|^2 / (2K)) (2 - 1/K + (1 - K) |v|^2 / (2 K^2)) / (2 pi K)``
    with ``K(t) = 1 - exp(-rate t) / 2``.
    """
    if vgrid.d_v != 2:
        raise ContractError("the BKW profile is defined on a 2D velocity grid")
    K, _ = _bkw_shape(t, rate)
    s = vgrid.speed_sq
    return np.exp(-s / (2 * K)) * (2 - 1 / K + (1 - K) * s / (2 * K**2)) / (2 * np.pi * K)


def bkw_time_derivative(vgrid: VelocityGrid, t: float, rate: float = BKW_RATE) -> np.ndarray:
    """Analytic ``d/dt`` of :func:`bkw_profile`."""
    if vgrid.d_v != 2:
        raise ContractError("the BKW profile is defined on a 2D velocity grid")
    K, dK = _bkw_shape(t, rate)
    s = vgrid.speed_sq
    E = np.exp(-s / (2 * K))
    a = 2 - 1 / K + (1 - K) * s / (2 * K**2)
    da = 1 / K**2 + s * (K - 2) / (2 * K**3)
    dfdK = E * (-a / K**2 + a * s / (2 * K**3) + da / K) / (2 * np.pi)
    return dfdK * dK
