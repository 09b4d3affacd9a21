"""Fourier spectral Boltzmann collision operator, 2D velocity, constant kernel.

With ``B = 1/(2*pi)`` and relative velocities truncated at ``|g| <= R`` the
angular integrals are analytic and the operator in Fourier space reads

    Q_k = sum_{l + m = k} g_l f_m [beta(l, m) - beta(l, l)],
    beta(l, m) = 2 pi int_0^R xi J0(xi a) J0(xi b) dxi,
    a = pi |l + m| / (2 L),  b = pi |l - m| / (2 L).

The radial integral has a closed form (Lommel), so ``beta`` depends only on the
integer pair ``(|l+m|^2, |l-m|^2)``. The sum is evaluated directly, O(n_v^4).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import j0, j1

from .errors import ConfigError, ContractError
from .grid import VelocityGrid

# rows x pairs processed per chunk of the direct sum (complex entries)
_CHUNK_ENTRIES = 2_000_000


def lommel_integral(a, b, R):
    """``int_0^R xi J0(a xi) J0(b xi) dxi`` for arrays ``a, b >= 0``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    out = np.empty(a.shape)
    # Symmetric in (a, b), so the midpoint value is accurate to O((a - b)^2);
    # this also avoids cancellation and underflow in a^2 - b^2.
    same = np.abs(a - b) * R < 1e-7
    aR = 0.5 * (a[same] + b[same]) * R
    out[same] = 0.5 * R**2 * (j0(aR) ** 2 + j1(aR) ** 2)
    ad, bd = a[~same], b[~same]
    aR, bR = ad * R, bd * R
    out[~same] = R * (ad * j1(aR) * j0(bR) - bd * j0(aR) * j1(bR)) / (ad**2 - bd**2)
    return out


@dataclass(frozen=True)
class KernelModes:
    """Precomputed kernel-mode table for one velocity resolution.

    ``gain`` maps the integer key ``(|l+m|^2, |l-m|^2)`` to ``beta``; ``loss``
    holds ``beta(l, l)`` per wave vector in FFT ordering.
    """

    n_v: int
    L: float
    R: float
    symmetric: bool
    gain: dict
    loss: np.ndarray
    # flattened FFT indices of the admissible pairs (l, m) with l + m in range
    pair_l: np.ndarray = field(repr=False)
    pair_m: np.ndarray = field(repr=False)
    pair_k: np.ndarray = field(repr=False)
    pair_weight: np.ndarray = field(repr=False)
    scatter: sp.csr_matrix = field(repr=False)
    # the same pairs grouped by output mode k, zero-padded to a common length
    by_k_l: np.ndarray = field(repr=False)
    by_k_m: np.ndarray = field(repr=False)
    by_k_weight: np.ndarray = field(repr=False)

    def beta(self, l, m):
        """Gain mode ``beta(l, m)`` for integer wave vectors ``l, m``."""
        l = np.asarray(l)
        m = np.asarray(m)
        p = int(np.sum((l + m) ** 2))
        q = int(np.sum((l - m) ** 2))
        if (p, q) in self.gain:
            return self.gain[(p, q)]
        return _beta_from_keys(np.array([p]), np.array([q]), self.L, self.R)[0]


def _beta_from_keys(p, q, L, R):
    scale = np.pi / (2.0 * L)
    return 2.0 * np.pi * lommel_integral(scale * np.sqrt(p), scale * np.sqrt(q), R)


def wave_numbers(n_v: int) -> np.ndarray:
    """Integer wave numbers in FFT storage order, range ``[-n_v/2, n_v/2 - 1]``."""
    return np.fft.fftfreq(n_v, d=1.0 / n_v).astype(int)


def default_radius(L: float) -> float:
    """Truncation radius ``2 sqrt(2) L / (3 + sqrt(2))``.

    This is the largest radius for which a function supported in the ball
    of radius ``2 L / (3 + sqrt(2))`` produces no aliasing in the periodized
    interaction. Larger radii bleed aliasing error into momentum and energy.
    """
    return 2.0 * np.sqrt(2.0) * L / (3.0 + np.sqrt(2.0))


def build_kernel_modes(n_v: int, L: float, R: float | None = None,
                       symmetric: bool = True) -> KernelModes:
    """Tabulate the kernel modes for an ``n_v x n_v`` grid on ``[-L, L)^2``.

    ``R`` defaults to :func:`default_radius`; it must satisfy ``0 < R <= 2 L``.

    With ``symmetric=True`` the unpaired Nyquist wave number ``-n_v/2`` is
    left out of inputs and outputs. The remaining mode set is closed under
    negation and reflection, so the result is exactly real and commutes with
    velocity reflections. The asymmetric variant keeps every FFT mode.
    """
    if n_v < 4 or n_v % 2:
        raise ConfigError("must be even and >= 4", "n_v")
    if R is None:
        R = default_radius(L)
    if not (0.0 < R <= 2.0 * L):
        raise ConfigError(f"truncation radius must satisfy 0 < R <= 2L, got {R}", "R")

    k1 = wave_numbers(n_v)
    lo, hi = -n_v // 2 + int(symmetric), n_v // 2 - 1
    # 1D admissible pairs (l, m) with l, m and l + m inside the mode range
    L1, M1 = np.meshgrid(k1, k1, indexing="ij")
    S1 = L1 + M1
    ok = (S1 >= lo) & (S1 <= hi) & (L1 >= lo) & (M1 >= lo)
    il, im = np.nonzero(ok)
    ik = S1[ok] % n_v
    lv, mv = k1[il], k1[im]

    # 2D pairs: outer product of 1D pair lists
    n1 = il.size
    a, b = np.meshgrid(np.arange(n1), np.arange(n1), indexing="ij")
    a, b = a.ravel(), b.ravel()
    pair_l = il[a] * n_v + il[b]
    pair_m = im[a] * n_v + im[b]
    pair_k = ik[a] * n_v + ik[b]
    p_key = (lv[a] + mv[a]) ** 2 + (lv[b] + mv[b]) ** 2
    q_key = (lv[a] - mv[a]) ** 2 + (lv[b] - mv[b]) ** 2

    keys, inverse = np.unique(np.stack([p_key, q_key], axis=1), axis=0, return_inverse=True)
    inverse = inverse.ravel()
    values = _beta_from_keys(keys[:, 0], keys[:, 1], L, R)
    gain = {(int(p), int(q)): float(v) for (p, q), v in zip(keys, values)}

    K1, K2 = np.meshgrid(k1, k1, indexing="ij")
    loss = _beta_from_keys(4 * (K1**2 + K2**2).ravel(), np.zeros(n_v * n_v), L, R)

    weight = values[inverse] - loss[pair_l]
    n_modes = n_v * n_v
    scatter = sp.csr_matrix(
        (np.ones(pair_k.size), (np.arange(pair_k.size), pair_k)),
        shape=(pair_k.size, n_modes),
    )
    by_k_l, by_k_m, by_k_weight = _group_by_mode(pair_l, pair_m, pair_k, weight, n_modes)
    for arr in (loss, pair_l, pair_m, pair_k, weight, by_k_l, by_k_m, by_k_weight):
        arr.setflags(write=False)
    return KernelModes(
        n_v=n_v,
        L=float(L),
        R=float(R),
        symmetric=bool(symmetric),
        gain=gain,
        loss=loss,
        pair_l=pair_l,
        pair_m=pair_m,
        pair_k=pair_k,
        pair_weight=weight,
        scatter=scatter,
        by_k_l=by_k_l,
        by_k_m=by_k_m,
        by_k_weight=by_k_weight,
    )


def _group_by_mode(pair_l, pair_m, pair_k, weight, n_modes):
    order = np.argsort(pair_k, kind="stable")
    counts = np.bincount(pair_k, minlength=n_modes)
    width = int(counts.max())
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    slot = np.arange(pair_k.size) - np.repeat(starts, counts)
    rows = pair_k[order]
    by_l = np.zeros((n_modes, width), dtype=np.intp)
    by_m = np.zeros((n_modes, width), dtype=np.intp)
    by_w = np.zeros((n_modes, width))
    by_l[rows, slot] = pair_l[order]
    by_m[rows, slot] = pair_m[order]
    by_w[rows, slot] = weight[order]
    return by_l, by_m, by_w


def to_modes(f, n_v):
    """Fourier coefficients of flattened samples; trailing axis is velocity.

    The ``(-1)^l`` phase from the ``-L`` grid offset is omitted: it factors
    out of ``l + m = k`` exactly and cancels in :func:`from_modes`.
    """
    f = np.asarray(f)
    lead = f.shape[:-1]
    fh = np.fft.fft2(f.reshape(lead + (n_v, n_v))) / (n_v * n_v)
    return fh.reshape(lead + (n_v * n_v,))


def from_modes(fh, n_v):
    lead = fh.shape[:-1]
    f = np.fft.ifft2(fh.reshape(lead + (n_v, n_v))) * (n_v * n_v)
    return f.reshape(lead + (n_v * n_v,))


def pair_table_modes(vh, modes: KernelModes):
    """Mode sums ``Q(V_p, V_q)`` for every ordered pair of rows of ``vh``.

    Grouping the pairs by output mode turns the sum into one small complex
    matrix product per mode: ``Q_k = (V[:, L_k] * w_k) @ V[:, M_k].T``.
    """
    r = vh.shape[0]
    n_modes = modes.by_k_l.shape[0]
    out = np.empty((n_modes, r, r), dtype=complex)
    width = modes.by_k_l.shape[1]
    step = max(1, _CHUNK_ENTRIES // max(1, r * width))
    for start in range(0, n_modes, step):
        sl = slice(start, start + step)
        A = vh[:, modes.by_k_l[sl]] * modes.by_k_weight[sl]  # r x k x j
        B = vh[:, modes.by_k_m[sl]]
        out[sl] = np.matmul(A.transpose(1, 0, 2), B.transpose(1, 2, 0))
    return out.transpose(1, 2, 0)


def bilinear_modes(gh, fh, modes: KernelModes):
    """Direct mode sum for stacks of coefficient vectors (rows of ``gh``, ``fh``)."""
    gh = np.atleast_2d(gh)
    fh = np.atleast_2d(fh)
    rows = gh.shape[0]
    out = np.empty((rows, modes.n_v * modes.n_v), dtype=complex)
    npairs = modes.pair_k.size
    step = max(1, _CHUNK_ENTRIES // npairs)
    ST = modes.scatter.T.tocsr()
    for start in range(0, rows, step):
        sl = slice(start, start + step)
        prod = gh[sl][:, modes.pair_l] * fh[sl][:, modes.pair_m]
        prod *= modes.pair_weight
        out[sl] = (ST @ prod.T).T
    return out


class CollisionOperator:
    """Evaluates ``Q(g, f)`` on a 2D velocity grid and counts evaluations.

    ``calls`` counts bilinear evaluations; a batched table of ``r x r`` pairs
    adds ``r**2``.
    """

    def __init__(self, grid: VelocityGrid, R: float | None = None, modes: KernelModes | None = None):
        if grid.d_v != 2:
            raise ContractError("the collision operator requires d_v = 2")
        if modes is None:
            modes = build_kernel_modes(grid.n_v, grid.L_v, R)
        elif modes.n_v != grid.n_v or not np.isclose(modes.L, grid.L_v):
            raise ContractError("kernel modes do not match the velocity grid")
        self.grid = grid
        self.modes = modes
        self.calls = 0
        self.last_imag_residue = 0.0

    def _finish(self, qh):
        q = from_modes(qh, self.grid.n_v)
        self.last_imag_residue = float(np.max(np.abs(q.imag), initial=0.0))
        return q.real

    def _check(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape[-1] != self.grid.size:
            raise ContractError(
                f"velocity field has {f.shape[-1]} samples, grid has {self.grid.size}"
            )
        return f

    def bilinear(self, g, f):
        """``Q(g, f)``; leading axes of ``g`` and ``f`` are batched pairwise."""
        g = self._check(g)
        f = self._check(f)
        g, f = np.broadcast_arrays(g, f)
        lead = g.shape[:-1]
        n = self.grid.n_v
        gh = to_modes(g, n).reshape(-1, n * n)
        fh = to_modes(f, n).reshape(-1, n * n)
        self.calls += gh.shape[0]
        return self._finish(bilinear_modes(gh, fh, self.modes)).reshape(lead + (n * n,))

    def quadratic(self, f):
        return self.bilinear(f, f)

    def pair_table(self, V):
        """``Q(V_p, V_q)`` for all column pairs of ``V`` (shape ``size x r``).

        Returns an array of shape ``(r, r, size)``; costs ``r**2`` evaluations.
        """
        V = self._check(np.asarray(V).T)
        r = V.shape[0]
        n = self.grid.n_v
        vh = to_modes(V, n)
        self.calls += r * r
        return self._finish(pair_table_modes(vh, self.modes))


def q_bilinear(g, f, op: CollisionOperator):
    return op.bilinear(g, f)


def q_quadratic(f, op: CollisionOperator):
    return op.quadratic(f)


def loss_bound(rho) -> float:
    """Estimate of ``sup |Q^-(f)|``; equals ``sup rho`` for this kernel in 2D."""
    return float(np.max(rho))
