"""Uniform phase-space grids and the discrete L2 inner products.

Quadrature everywhere is the midpoint/rectangle rule with constant weights,
so weighted orthonormality reduces to scaling by ``sqrt(weight)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ConfigError, ContractError

BoundaryCondition = Literal["periodic", "neumann"]
_BCS = ("periodic", "neumann")


@dataclass(frozen=True)
class SpatialGrid:
    """Cell-centred grid on ``[x_min, x_max]`` with ``n_x`` cells."""

    n_x: int = 100
    x_min: float = 0.0
    x_max: float = 1.0
    bc: BoundaryCondition = "periodic"

    def __post_init__(self):
        if self.n_x < 1:
            raise ConfigError("must be >= 1", "n_x")
        if not self.x_max > self.x_min:
            raise ConfigError("x_max must exceed x_min", "x_max")
        if self.bc not in _BCS:
            raise ConfigError(f"unknown boundary condition {self.bc!r}", "bc")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.dx

    @property
    def weight(self) -> float:
        return self.dx


@dataclass(frozen=True)
class VelocityGrid:
    """Tensor grid on ``[-L_v, L_v)^d_v``.

    The right endpoint is excluded so the nodes coincide with the collocation
    grid of the discrete Fourier transform. Flattened fields are stored in
    row-major order over ``(v1, v2)``.
    """

    n_v: int = 32
    L_v: float = 8.4
    d_v: int = 2
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d_v not in (1, 2):
            raise ConfigError("only d_v in {1, 2} is supported", "d_v")
        if self.n_v < 4 or self.n_v % 2:
            raise ConfigError("must be even and >= 4", "n_v")
        if not self.L_v > 0:
            raise ConfigError("must be positive", "L_v")

    @property
    def dv(self) -> float:
        return 2.0 * self.L_v / self.n_v

    @property
    def nodes(self) -> np.ndarray:
        return -self.L_v + np.arange(self.n_v) * self.dv

    @property
    def size(self) -> int:
        return self.n_v**self.d_v

    @property
    def weight(self) -> float:
        return self.dv**self.d_v

    def component(self, axis: int) -> np.ndarray:
        """Flattened samples of velocity component ``axis`` on the full grid."""
        if not 0 <= axis < self.d_v:
            raise ContractError(f"axis {axis} out of range for d_v={self.d_v}")
        key = ("component", axis)
        if key not in self._cache:
            mesh = np.meshgrid(*([self.nodes] * self.d_v), indexing="ij")
            arr = mesh[axis].ravel()
            arr.setflags(write=False)
            self._cache[key] = arr
        return self._cache[key]

    @property
    def v1(self) -> np.ndarray:
        return self.component(0)

    @property
    def speed_sq(self) -> np.ndarray:
        """``|v|^2`` on the full grid."""
        if "speed_sq" not in self._cache:
            arr = sum(self.component(a) ** 2 for a in range(self.d_v))
            arr.setflags(write=False)
            self._cache["speed_sq"] = arr
        return self._cache["speed_sq"]


def _check_pair(a, b, n, what):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != n or b.shape[0] != n:
        raise ContractError(
            f"{what} inner product expects length {n}, got {a.shape[0]} and {b.shape[0]}"
        )
    return a, b


def inner_product_x(a, b, grid: SpatialGrid):
    """Midpoint-rule ``<a, b>_x``. Extra trailing axes are contracted column-wise."""
    a, b = _check_pair(a, b, grid.n_x, "spatial")
    return np.sum(a * b, axis=0) * grid.dx


def inner_product_v(a, b, grid: VelocityGrid):
    """Rectangle-rule ``<a, b>_v`` over the full velocity grid."""
    a, b = _check_pair(a, b, grid.size, "velocity")
    return np.sum(a * b, axis=0) * grid.weight


def ghost_fill(values, bc: BoundaryCondition, width: int, axis: int = 0) -> np.ndarray:
    """Pad ``values`` with ``width`` ghost cells on both ends of ``axis``.

    Periodic wraps around; Neumann repeats the edge value (zero gradient).
    """
    if width < 1:
        raise ContractError("ghost width must be >= 1")
    if bc == "periodic":
        return np.pad(values, _pad_spec(np.ndim(values), axis, width), mode="wrap")
    if bc == "neumann":
        return np.pad(values, _pad_spec(np.ndim(values), axis, width), mode="edge")
    raise ContractError(f"unknown boundary condition {bc!r}")


def _pad_spec(ndim, axis, width):
    spec = [(0, 0)] * ndim
    spec[axis] = (width, width)
    return spec
