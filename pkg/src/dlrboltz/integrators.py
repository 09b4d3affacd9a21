"""XL and sXL integrators for matrix ODEs ``dA/dt = F(t, A)``.

Plain Euclidean orthonormality; the Boltzmann solver uses the weighted
factor algebra of :mod:`dlrboltz.lowrank` instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as la

from .errors import ContractError, IntegrationError
from .lowrank import threshold_rank, orthonormalize_augment

Rhs = Callable[[float, np.ndarray], np.ndarray]
FactorMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FactoredMatrix:
    X: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return self.S.shape[0]

    def full(self) -> np.ndarray:
        return self.X @ self.S @ self.V.T

    @classmethod
    def from_dense(cls, A, r: int) -> "FactoredMatrix":
        U, s, Wt = la.svd(A, full_matrices=False)
        return cls(U[:, :r], np.diag(s[:r]), Wt[:r].T)


class MatrixOde:
    """Right-hand side ``F(t, A)`` on ``m1 x m2`` matrices.

    ``separable=(K_map, V_map)`` registers the factorization
    ``F(K V^T) = K_map(K) V_map(V)^T``; it is checked on random probes.
    Separable problems are autonomous, so ``rhs`` may ignore ``t``.
    """

    def __init__(self, shape, rhs: Rhs, separable: tuple[FactorMap, FactorMap] | None = None,
                 probe_rank: int = 2, seed: int = 0):
        self.shape = tuple(shape)
        self.rhs = rhs
        self.separable = separable
        if separable is not None:
            self._validate_separable(probe_rank, seed)

    def __call__(self, t, A):
        return self.rhs(t, A)

    def _validate_separable(self, r, seed):
        rng = np.random.default_rng(seed)
        m1, m2 = self.shape
        K_map, V_map = self.separable
        for _ in range(3):
            K = rng.standard_normal((m1, r))
            V = rng.standard_normal((m2, r))
            F = self.rhs(0.0, K @ V.T)
            G = K_map(K) @ V_map(V).T
            if np.linalg.norm(F - G) > 1e-10 * max(np.linalg.norm(F), 1e-300):
                raise ContractError("separable factorization does not reproduce F(K V^T)")


def _integrate(fun, y0, t0, dt, scheme):
    if scheme == "euler":
        return y0 + dt * fun(t0, y0)
    if scheme == "rk4":
        k1 = fun(t0, y0)
        k2 = fun(t0 + dt / 2, y0 + dt / 2 * k1)
        k3 = fun(t0 + dt / 2, y0 + dt / 2 * k2)
        k4 = fun(t0 + dt, y0 + dt * k3)
        return y0 + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    raise ContractError(f"unknown substep scheme {scheme!r}")


def _finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise IntegrationError(f"non-finite values in {what}")
    return arr


def _l_step_and_truncate(X_hat, L_hat, rank, threshold):
    V_hat, R = la.qr(L_hat, mode="economic")
    S_hat = R.T
    Xs, sig, Vst = la.svd(S_hat)
    if threshold is not None:
        rank = threshold_rank(sig, threshold)
    rank = min(rank, sig.size)
    return FactoredMatrix(X_hat @ Xs[:, :rank], np.diag(sig[:rank]), V_hat @ Vst[:rank].T)


def xl_step(ode: MatrixOde, Y: FactoredMatrix, t: float, dt: float, substep: str = "euler",
            rank: int | None = None, threshold: float | None = None) -> FactoredMatrix:
    """One XL step: integrate K, augment the row basis, integrate L, truncate.

    Truncates to ``rank`` (default: the rank of ``Y``) unless ``threshold``
    is given.
    """
    X, S, V = Y.X, Y.S, Y.V
    K1 = _integrate(lambda s, K: ode(s, K @ V.T) @ V, X @ S, t, dt, substep)
    _finite(K1, "K substep")
    X_hat, _ = orthonormalize_augment(X, K1, 1.0)
    L0 = np.zeros((V.shape[0], X_hat.shape[1]))
    L0[:, : Y.rank] = V @ S.T
    L1 = _integrate(lambda s, L: ode(s, X_hat @ L.T).T @ X_hat, L0, t, dt, substep)
    _finite(L1, "L substep")
    return _l_step_and_truncate(X_hat, L1, rank or Y.rank, threshold)


def sxl_step(ode: MatrixOde, Y: FactoredMatrix, dt: float, t: float = 0.0,
             rank: int | None = None, threshold: float | None = None) -> FactoredMatrix:
    """One sXL step: augment by ``K_map(X S)``, explicit-Euler L step, truncate."""
    if ode.separable is None:
        raise ContractError("sxl_step needs a separable right-hand side")
    X, S, V = Y.X, Y.S, Y.V
    extras = _finite(ode.separable[0](X @ S), "augmentation")
    X_hat, _ = orthonormalize_augment(X, extras, 1.0)
    L0 = np.zeros((V.shape[0], X_hat.shape[1]))
    L0[:, : Y.rank] = V @ S.T
    L1 = _finite(L0 + dt * ode(t, X_hat @ L0.T).T @ X_hat, "L step")
    return _l_step_and_truncate(X_hat, L1, rank or Y.rank, threshold)


def augmented_basis_xl(ode: MatrixOde, Y: FactoredMatrix, t, dt, substep="euler"):
    """The ``X_hat`` produced inside :func:`xl_step` (exposed for diagnostics)."""
    K1 = _integrate(lambda s, K: ode(s, K @ Y.V.T) @ Y.V, Y.X @ Y.S, t, dt, substep)
    return orthonormalize_augment(Y.X, K1, 1.0)[0]


def augmented_basis_sxl(ode: MatrixOde, Y: FactoredMatrix):
    return orthonormalize_augment(Y.X, ode.separable[0](Y.X @ Y.S), 1.0)[0]
