"""Low-rank phase-space states ``f = X S V^T`` and their factor algebra.

Orthonormality is with respect to the quadrature-weighted inner products of
:mod:`dlrboltz.grid`: ``X^T X dx = I`` and ``V^T V dv^d_v = I``. Every
factorization below scales rows by ``sqrt(weight)``, runs the ordinary
Euclidean routine and scales back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import ContractError
from .grid import SpatialGrid, VelocityGrid

DROP_TOL = 1e-10


@dataclass(frozen=True)
class LowRankState:
    X: np.ndarray
    S: np.ndarray
    V: np.ndarray
    xgrid: SpatialGrid
    vgrid: VelocityGrid

    def __post_init__(self):
        r = self.S.shape[0]
        if self.S.shape != (r, r) or self.X.shape != (self.xgrid.n_x, r) or self.V.shape != (
            self.vgrid.size,
            r,
        ):
            raise ContractError(
                f"inconsistent factor shapes X{self.X.shape} S{self.S.shape} V{self.V.shape}"
            )

    @property
    def rank(self) -> int:
        return self.S.shape[0]

    @property
    def K(self) -> np.ndarray:
        return self.X @ self.S

    @property
    def L(self) -> np.ndarray:
        return self.V @ self.S.T

    def orthonormality_error(self) -> float:
        r = self.rank
        ex = self.X.T @ self.X * self.xgrid.weight - np.eye(r)
        ev = self.V.T @ self.V * self.vgrid.weight - np.eye(r)
        return float(max(np.abs(ex).max(initial=0.0), np.abs(ev).max(initial=0.0)))

    def singular_values(self) -> np.ndarray:
        return la.svdvals(self.S)


def evaluate_full(state: LowRankState) -> np.ndarray:
    """Dense ``n_x x n_v^d_v`` samples of the state."""
    return state.X @ state.S @ state.V.T


def weighted_qr(A, weight: float):
    """``A = Q R`` with ``Q^T Q weight = I``; diagonal of ``R`` made non-negative."""
    s = np.sqrt(weight)
    Q, R = la.qr(A * s, mode="economic")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * (signs / s), R * signs[:, None]


def from_full(field, r: int | None, xgrid: SpatialGrid, vgrid: VelocityGrid,
              threshold: float | None = None) -> LowRankState:
    """Best rank-``r`` approximation of ``field`` in the weighted Frobenius norm.

    With ``threshold`` the rank is instead the smallest one whose discarded
    singular values have l2 norm at most ``threshold``; ``r`` then caps it
    (``None`` for no cap).
    """
    field = np.asarray(field, dtype=float)
    n_x, n_v = xgrid.n_x, vgrid.size
    if field.shape != (n_x, n_v):
        raise ContractError(f"field shape {field.shape} does not match grids ({n_x}, {n_v})")
    full_rank = min(n_x, n_v)
    if r is None:
        if threshold is None:
            raise ContractError("give a rank, a threshold, or both")
        r = full_rank
    if not 1 <= r <= full_rank:
        raise ContractError(f"rank {r} outside [1, {full_rank}]")
    sx, sv = np.sqrt(xgrid.weight), np.sqrt(vgrid.weight)
    if not np.any(field):
        X = np.eye(n_x, r) / sx
        V = np.eye(n_v, r) / sv
        return LowRankState(X, np.zeros((r, r)), V, xgrid, vgrid)
    U, sig, Wt = la.svd(field * (sx * sv), full_matrices=False)
    if threshold is not None:
        r = min(r, threshold_rank(sig, threshold))
    return LowRankState(U[:, :r] / sx, np.diag(sig[:r]), Wt[:r].T / sv, xgrid, vgrid)


def threshold_rank(sig, threshold):
    """Smallest ``k >= 1`` with ``||sig[k:]|| <= threshold``."""
    tail = np.sqrt(np.cumsum((sig**2)[::-1]))[::-1]  # tail[k] = ||sig[k:]||
    below = np.nonzero(tail <= threshold)[0]
    return max(int(below[0]) if below.size else sig.size, 1)


def orthonormalize_augment(X, extras, weight: float, drop_tol: float = DROP_TOL):
    """Extend the orthonormal columns of ``X`` by the span of ``extras``.

    Block Gram-Schmidt against ``X`` (two passes), then a column-pivoted QR of
    the residual. Residual directions whose norm falls below
    ``drop_tol * max column norm of extras`` are dropped.

    Returns ``(X_hat, m)`` where ``X_hat[:, :r]`` is ``X`` itself and ``m`` is
    the number of columns actually added.
    """
    X = np.asarray(X, dtype=float)
    E = np.asarray(extras, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    if E.shape[1] == 0:
        return X.copy(), 0
    s = np.sqrt(weight)
    Xs = X * s
    Es = E * s
    scale = np.linalg.norm(Es, axis=0).max()
    if scale == 0.0:
        return X.copy(), 0
    Y = Es - Xs @ (Xs.T @ Es)
    Y -= Xs @ (Xs.T @ Y)
    Q, R, _ = la.qr(Y, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    m = int(np.count_nonzero(diag > drop_tol * scale))
    m = min(m, X.shape[0] - X.shape[1])
    if m == 0:
        return X.copy(), 0
    Q = Q[:, :m] * np.sign(np.diag(R)[:m])
    # one more pass keeps the new block orthogonal to X at roundoff level
    Q -= Xs @ (Xs.T @ Q)
    Q, R2 = la.qr(Q, mode="economic")
    Q *= np.where(np.diag(R2) < 0, -1.0, 1.0)
    return np.hstack([X, Q / s]), m


def truncate(
    X_hat,
    S_hat,
    V_hat,
    xgrid: SpatialGrid,
    vgrid: VelocityGrid,
    rank: int | None = None,
    threshold: float | None = None,
    return_singular_values: bool = False,
):
    """SVD truncation of ``X_hat S_hat V_hat^T``.

    Exactly one of ``rank`` (keep the ``rank`` largest singular values,
    zero ones included) or ``threshold`` (smallest rank whose discarded
    singular values have l2 norm <= threshold) must be given.
    """
    if (rank is None) == (threshold is None):
        raise ContractError("give exactly one of rank or threshold")
    R = S_hat.shape[0]
    Xs, sig, Vst = la.svd(S_hat)
    if rank is None:
        rank = threshold_rank(sig, threshold)
    elif rank > R:
        raise ContractError(f"target rank {rank} exceeds available rank {R}")
    state = LowRankState(
        X_hat @ Xs[:, :rank], np.diag(sig[:rank]), V_hat @ Vst[:rank].T, xgrid, vgrid
    )
    if return_singular_values:
        return state, sig
    return state


def weighted_frobenius(field, xgrid: SpatialGrid, vgrid: VelocityGrid) -> float:
    return float(np.sqrt(np.sum(np.asarray(field) ** 2) * xgrid.weight * vgrid.weight))
