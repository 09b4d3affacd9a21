"""Time steppers for the stiff Boltzmann and the simplified BGK equation.

Every scheme splits transport from collisions. Transport is a first-order
projector-splitting (K, S, L) step; the collision step adds a linear penalty
``lam (f - f_new) / eps`` that is solved in closed form, which keeps the time
step independent of ``eps``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .advection import (
    check_cfl,
    coefficient_matrix_v,
    muscl_transport_full,
    projected_K_transport,
    projected_x_derivative,
    upwind_coefficient_matrices,
)
from .collision import CollisionOperator, loss_bound
from .errors import ConfigError, ContractError, DomainError, IntegrationError
from .grid import SpatialGrid, VelocityGrid
from .lowrank import LowRankState, orthonormalize_augment, truncate, weighted_qr
from .moments import (
    bgk_coefficients,
    bgk_profiles,
    compute_moments_full,
    maxwellian_bgk_1v,
)


class Method(str, enum.Enum):
    FULL_TENSOR = "FullTensor"
    KSL_NONSTIFF = "KslNonstiff"
    DLR_XL = "DlrXL"
    DLR_SXL1 = "DlrSxl1"
    DLR_SXL2 = "DlrSxl2"
    DLR_SXL3 = "DlrSxl3"

    @property
    def low_rank(self) -> bool:
        return self is not Method.FULL_TENSOR


class Augmentation(str, enum.Enum):
    TOP_R = "top_r"
    TOL = "tol"
    ALL = "all"


_SXL_STRATEGY = {
    Method.DLR_SXL1: Augmentation.TOP_R,
    Method.DLR_SXL2: Augmentation.TOL,
    Method.DLR_SXL3: Augmentation.ALL,
}


@dataclass(frozen=True)
class SolverConfig:
    """Physical and numerical parameters of one run.

    ``lam=None`` means "auto": :meth:`resolve_lambda` sets it to
    ``1.1 * sup rho`` of the initial data. ``threshold=None`` keeps a fixed
    rank ``rank`` after every collision step.
    """

    xgrid: SpatialGrid = field(default_factory=SpatialGrid)
    vgrid: VelocityGrid = field(default_factory=VelocityGrid)
    eps: float = 1.0
    lam: float | None = None
    dt: float = 1e-3
    t_final: float = 0.1
    rank: int = 6
    method: Method = Method.DLR_XL
    sxl_tol: float = 0.01
    threshold: float | None = None
    R: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.dt > 0:
            raise ConfigError("must be positive", "dt")
        if not self.eps > 0:
            raise ConfigError("must be positive", "eps")
        if self.rank < 1:
            raise ConfigError("must be >= 1", "rank")
        if self.lam is not None and not self.lam > 0:
            raise ConfigError("must be positive", "lambda")
        if self.threshold is not None and self.threshold < 0:
            raise ConfigError("must be non-negative", "threshold")
        if self.t_final < 0:
            raise ConfigError("must be non-negative", "t_final")
        check_cfl(self.vgrid.L_v, self.dt, self.xgrid)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def lam_value(self) -> float:
        if self.lam is None:
            raise ConfigError("penalty parameter not resolved yet", "lambda")
        return self.lam

    def resolve_lambda(self, rho0) -> "SolverConfig":
        if self.lam is not None:
            return self
        return replace(self, lam=1.1 * loss_bound(rho0))


@dataclass
class StepReport:
    rank_before_trunc: int
    rank_after_trunc: int
    augmented: int
    collision_calls: int = 0
    singular_values: np.ndarray | None = None


def _finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise IntegrationError(f"non-finite values after {what}")
    return arr


def _penalized(old, gain, cfg: SolverConfig):
    """Closed form of ``(new - old)/dt = (gain + lam old - lam new)/eps``."""
    lam = cfg.lam_value
    return (cfg.eps * old + cfg.dt * (gain + lam * old)) / (cfg.eps + lam * cfg.dt)


# ---------------------------------------------------------------- full tensor


def full_tensor_step(f, cfg: SolverConfig, op: CollisionOperator):
    """Transport, then the penalized collision update, on dense samples."""
    f_star = muscl_transport_full(f, cfg.dt, cfg.xgrid, cfg.vgrid)
    return _finite(_penalized(f_star, op.quadratic(f_star), cfg), "full tensor step")


def bgk_full_tensor_step(f, cfg: SolverConfig):
    """Dense reference for the simplified BGK model (penalty ``lam = 1``)."""
    f_star = muscl_transport_full(f, cfg.dt, cfg.xgrid, cfg.vgrid)
    m = compute_moments_full(f_star, cfg.vgrid)
    M = maxwellian_bgk_1v(m.rho, m.u[:, 0], cfg.vgrid)
    return _finite((cfg.eps * f_star + cfg.dt * M) / (cfg.eps + cfg.dt), "BGK step")


# ------------------------------------------------------------------ transport


def ksl_advection_substep(state: LowRankState, cfg: SolverConfig) -> LowRankState:
    """K, S and L substeps for ``f_t + v1 f_x = 0`` with explicit Euler."""
    xg, vg, dt = state.xgrid, state.vgrid, cfg.dt
    V = state.V
    A = coefficient_matrix_v(V, vg, 0)
    K1 = projected_K_transport(state.K, A, dt, xg)
    X_star, S1 = weighted_qr(K1, xg.weight)

    Mp, Mm = projected_x_derivative(X_star, xg, conservative=xg.bc == "periodic")
    Ap, Am = upwind_coefficient_matrices(V, vg, 0)
    S2 = S1 + dt * (Mp @ S1 @ Ap + Mm @ S1 @ Am)

    L2 = V @ S2.T
    v = vg.v1[:, None]
    L_star = L2 - dt * (np.maximum(v, 0) * (L2 @ Mp.T) + np.minimum(v, 0) * (L2 @ Mm.T))
    V_star, R = weighted_qr(_finite(L_star, "transport substep"), vg.weight)
    return LowRankState(X_star, R.T, V_star, xg, vg)


# ------------------------------------------------------------------ collision


def collision_tables(state: LowRankState, op: CollisionOperator):
    """``Q_pq = Q(V_p, V_q)`` (shape ``r, r, n_v^2``) and ``C[j, p, q] = <V_j Q_pq>_v``."""
    Q = op.pair_table(state.V)
    C = np.einsum("bj,pqb->jpq", state.V, Q) * state.vgrid.weight
    return Q, C


def _products(K):
    return K[:, :, None] * K[:, None, :]


def _collision_L_update(state: LowRankState, X_hat, Q, cfg: SolverConfig):
    """Penalized L step on ``X_hat``; returns the padded L before factorization."""
    R = X_hat.shape[1]
    L4 = np.zeros((state.vgrid.size, R))
    L4[:, : state.rank] = state.L
    P = np.einsum("xi,xpq->ipq", X_hat, _products(state.K)) * state.xgrid.weight
    gain = np.einsum("ipq,pqb->bi", P, Q)
    return _finite(_penalized(L4, gain, cfg), "collision L step")


def _factor_and_truncate(state, X_hat, L_hat, cfg: SolverConfig, augmented: int, calls: int):
    V_hat, Rm = weighted_qr(L_hat, state.vgrid.weight)
    if cfg.threshold is None:
        new, sig = truncate(X_hat, Rm.T, V_hat, state.xgrid, state.vgrid,
                            rank=min(cfg.rank, X_hat.shape[1]), return_singular_values=True)
    else:
        new, sig = truncate(X_hat, Rm.T, V_hat, state.xgrid, state.vgrid,
                            threshold=cfg.threshold, return_singular_values=True)
    report = StepReport(X_hat.shape[1], new.rank, augmented, calls, sig)
    return new, report


def collision_substep_xl(state: LowRankState, cfg: SolverConfig, op: CollisionOperator,
                         tables=None):
    """Implicit-penalty X step, augmentation, L step and truncation."""
    calls0 = op.calls
    Q, C = tables if tables is not None else collision_tables(state, op)
    K = state.K
    gain_K = np.einsum("xpq,jpq->xj", _products(K), C)
    K4 = _finite(_penalized(K, gain_K, cfg), "collision K step")
    X_hat, m = orthonormalize_augment(state.X, K4, state.xgrid.weight)
    L_hat = _collision_L_update(state, X_hat, Q, cfg)
    return _factor_and_truncate(state, X_hat, L_hat, cfg, m, op.calls - calls0)


def augmentation_scores(state: LowRankState, C, cfg: SolverConfig):
    """``s(k, l) = max_j |d_jkl|`` with ``d_jkl`` the coefficient of ``X_k X_l`` in the K update."""
    coef = cfg.dt / (cfg.eps + cfg.lam_value * cfg.dt)
    d = coef * np.einsum("jpq,kp,lq->jkl", C, state.S, state.S)
    return np.abs(d).max(axis=0)


def select_pairs(scores, strategy: Augmentation, r: int, tol: float = 0.0):
    """Pairs ``(k, l)`` to augment with; ties resolve in row-major order."""
    strategy = Augmentation(strategy)
    flat = scores.ravel()
    if strategy is Augmentation.ALL:
        idx = np.arange(flat.size)
    elif strategy is Augmentation.TOP_R:
        idx = np.sort(np.argsort(-flat, kind="stable")[: min(r, flat.size)])
    else:
        idx = np.nonzero(flat > tol)[0]
    n = scores.shape[1]
    return [(int(i) // n, int(i) % n) for i in idx]


def collision_substep_sxl(state: LowRankState, cfg: SolverConfig, op: CollisionOperator,
                          strategy: Augmentation, tables=None):
    """Collision step augmenting with selected pointwise products ``X_k X_l``."""
    calls0 = op.calls
    Q, C = tables if tables is not None else collision_tables(state, op)
    pairs = select_pairs(augmentation_scores(state, C, cfg), strategy, state.rank, cfg.sxl_tol)
    X = state.X
    extras = np.stack([X[:, k] * X[:, l] for k, l in pairs], axis=1) if pairs else X[:, :0]
    X_hat, m = orthonormalize_augment(X, extras, state.xgrid.weight)
    L_hat = _collision_L_update(state, X_hat, Q, cfg)
    return _factor_and_truncate(state, X_hat, L_hat, cfg, m, op.calls - calls0)


def dlr_step(state: LowRankState, cfg: SolverConfig, op: CollisionOperator):
    """Transport substep followed by the configured collision substep."""
    star = ksl_advection_substep(state, cfg)
    if cfg.method is Method.DLR_XL:
        return collision_substep_xl(star, cfg, op)
    if cfg.method in _SXL_STRATEGY:
        return collision_substep_sxl(star, cfg, op, _SXL_STRATEGY[cfg.method])
    raise ConfigError(f"dlr_step cannot run method {cfg.method.value}", "method")


def ksl_nonstiff_step(state: LowRankState, cfg: SolverConfig, op: CollisionOperator):
    """Unsplit explicit K, S, L step with transport and collisions together.

    Collisions enter through ``Q(V_p, V_q)`` of the old velocity basis only,
    so the operator is evaluated ``r^2`` times per step. Needs ``dt`` to
    resolve ``eps``.
    """
    calls0 = op.calls
    xg, vg, dt = state.xgrid, state.vgrid, cfg.dt
    V = state.V
    Q, C = collision_tables(state, op)
    A = coefficient_matrix_v(V, vg, 0)
    rate = dt / cfg.eps

    K = state.K
    K1 = projected_K_transport(K, A, dt, xg) + rate * np.einsum("xpq,jpq->xj", _products(K), C)
    X1, S1 = weighted_qr(_finite(K1, "K step"), xg.weight)

    Mp, Mm = projected_x_derivative(X1, xg, conservative=xg.bc == "periodic")
    Ap, Am = upwind_coefficient_matrices(V, vg, 0)
    P1 = np.einsum("xi,xpq->ipq", X1, _products(X1 @ S1)) * xg.weight
    S2 = S1 + dt * (Mp @ S1 @ Ap + Mm @ S1 @ Am) - rate * np.einsum("ipq,jpq->ij", P1, C)

    L2 = V @ S2.T
    P2 = np.einsum("xi,xpq->ipq", X1, _products(X1 @ S2)) * xg.weight
    v = vg.v1[:, None]
    L3 = (L2 - dt * (np.maximum(v, 0) * (L2 @ Mp.T) + np.minimum(v, 0) * (L2 @ Mm.T))
          + rate * np.einsum("ipq,pqb->bi", P2, Q))
    V1, R = weighted_qr(_finite(L3, "L step"), vg.weight)
    new = LowRankState(X1, R.T, V1, xg, vg)
    return new, StepReport(new.rank, new.rank, 0, op.calls - calls0, new.singular_values())


# ------------------------------------------------------------------------ BGK


def bgk_collision_substep(state: LowRankState, cfg: SolverConfig, variant: str = "XL"):
    """Collision step for the simplified 1D BGK model with ``lam = 1``.

    The Maxwellian is rank 3 (coefficients ``rho, rho u, rho u^2`` against
    fixed velocity profiles), so every projection of it is formed from the
    separated pieces and never as a dense field.
    """
    xg, vg = state.xgrid, state.vgrid
    if vg.d_v != 1:
        raise ContractError("the BGK collision step needs d_v = 1")
    if variant not in ("XL", "sXL"):
        raise ContractError(f"unknown BGK variant {variant!r}")
    eps, dt = cfg.eps, cfg.dt
    K = state.K
    rho = K @ (state.V.sum(axis=0) * vg.weight)
    if np.any(rho <= 0):
        raise DomainError("non-positive density in BGK collision step")
    u = K @ (vg.nodes @ state.V * vg.weight) / rho
    coeffs = bgk_coefficients(rho, u)
    H = bgk_profiles(vg)
    MV = coeffs @ (H.T @ state.V * vg.weight)  # <M V_j>_v
    extras = (eps * K + dt * MV) / (eps + dt) if variant == "XL" else MV
    X_hat, m = orthonormalize_augment(state.X, _finite(extras, "BGK X step"), xg.weight)
    L4 = np.zeros((vg.size, X_hat.shape[1]))
    L4[:, : state.rank] = state.L
    XM = H @ (coeffs.T @ X_hat * xg.weight)  # <X_i M>_x
    L_hat = _finite((eps * L4 + dt * XM) / (eps + dt), "BGK L step")
    return _factor_and_truncate(state, X_hat, L_hat, cfg, m, 0)


def bgk_step(state: LowRankState, cfg: SolverConfig, variant: str = "XL"):
    return bgk_collision_substep(ksl_advection_substep(state, cfg), cfg, variant)


# -------------------------------------------------------------------- driving


def make_stepper(cfg: SolverConfig, op: CollisionOperator | None, bgk: bool = False):
    """Callable ``state -> (state, report)`` for the configured method.

    For the full-tensor method the state is the dense array and the report
    is ``None``.
    """
    m = cfg.method
    if bgk:
        if m is Method.FULL_TENSOR:
            return lambda f: (bgk_full_tensor_step(f, cfg), None)
        if m is Method.KSL_NONSTIFF:
            raise ConfigError("KslNonstiff is not defined for the BGK model", "method")
        variant = "XL" if m is Method.DLR_XL else "sXL"
        return lambda s: bgk_step(s, cfg, variant)
    if op is None:
        raise ContractError("Boltzmann steppers need a collision operator")
    if m is Method.FULL_TENSOR:
        def full(f):
            calls0 = op.calls
            f_new = full_tensor_step(f, cfg, op)
            return f_new, StepReport(0, 0, 0, op.calls - calls0)
        return full
    if m is Method.KSL_NONSTIFF:
        return lambda s: ksl_nonstiff_step(s, cfg, op)
    return lambda s: dlr_step(s, cfg, op)
