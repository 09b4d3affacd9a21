import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dlrboltz.errors import ContractError, DomainError
from dlrboltz.grid import SpatialGrid, VelocityGrid
from dlrboltz.lowrank import from_full
from dlrboltz.moments import (
    bgk_density_velocity,
    bkw_profile,
    bkw_time_derivative,
    compute_moments_full,
    compute_moments_lowrank,
    maxwellian,
    maxwellian_2v,
    maxwellian_bgk_1v,
)

VG2 = VelocityGrid(32, 8.4, 2)
VG1 = VelocityGrid(64, 8.4, 1)


# temperatures and drifts the 32-point grid resolves, with negligible tails beyond L_v
@given(
    st.floats(0.1, 3.0),
    st.floats(-0.5, 0.5),
    st.floats(-0.5, 0.5),
    st.floats(0.5, 1.2),
)
def test_maxwellian_moments_roundtrip(rho, u1, u2, T):
    f = maxwellian([rho], [[u1, u2]], [T], VG2)
    m = compute_moments_full(f, VG2)
    assert m.rho[0] == pytest.approx(rho, rel=1e-10)
    np.testing.assert_allclose(m.u[0], [u1, u2], atol=1e-10)
    assert m.T[0] == pytest.approx(T, rel=1e-9)
    assert m.E[0] == pytest.approx(rho * T + 0.5 * rho * (u1**2 + u2**2), rel=1e-9)
    assert m.is_physical()


def test_maxwellian_2v_roundtrip():
    f = maxwellian([1.0, 0.5], [[0.1, 0.0], [0.0, -0.2]], [1.0, 0.7], VG2)
    np.testing.assert_allclose(maxwellian_2v(compute_moments_full(f, VG2), VG2), f, atol=1e-10)


def test_maxwellian_rejects_nonpositive():
    with pytest.raises(DomainError):
        maxwellian([1.0], [[0.0, 0.0]], [0.0], VG2)
    with pytest.raises(DomainError):
        maxwellian([-1.0], [[0.0, 0.0]], [1.0], VG2)


def test_degenerate_cells_report_zero():
    m = compute_moments_full(np.zeros((2, VG2.size)), VG2)
    assert m.degenerate.all()
    np.testing.assert_array_equal(m.T, 0.0)
    np.testing.assert_array_equal(m.u, 0.0)
    assert not m.is_physical()


def test_moment_shape_contract():
    with pytest.raises(ContractError):
        compute_moments_full(np.ones((2, 5)), VG2)


def test_lowrank_moments_match_full(rng):
    xg = SpatialGrid(n_x=16)
    vg = VelocityGrid(16, 6.0, 2)
    rho = 1 + 0.3 * np.sin(2 * np.pi * xg.x)
    u = np.stack([0.2 * np.cos(2 * np.pi * xg.x), 0.1 * np.ones(16)], axis=1)
    T = 0.8 + 0.2 * rng.random(16)
    f = maxwellian(rho, u, T, vg)
    state = from_full(f, 16, xg, vg)
    a, b = compute_moments_full(f, vg), compute_moments_lowrank(state)
    for name in ("rho", "u", "T", "E"):
        np.testing.assert_allclose(getattr(b, name), getattr(a, name), rtol=1e-10, atol=1e-12)


def test_bgk_maxwellian_moments():
    # the simplified Maxwellian carries density rho, momentum rho u and
    # momentum flux rho (1 + u^2)
    rho, u = np.array([0.8, 1.3]), np.array([0.2, -0.4])
    f = maxwellian_bgk_1v(rho, u, VG1)
    r, w = bgk_density_velocity(f, VG1)
    np.testing.assert_allclose(r, rho, rtol=1e-12)
    np.testing.assert_allclose(w, u, rtol=1e-12)
    flux = f @ VG1.nodes**2 * VG1.weight
    np.testing.assert_allclose(flux, rho * (1 + u**2), rtol=1e-12)


def test_bkw_frozen_value_at_origin():
    # K(2) = 1 - exp(-1/4) / 2; f(0) = (2 - 1/K) / (2 pi K)
    f = bkw_profile(VG2, 2.0)
    assert f[np.argmin(VG2.speed_sq)] == pytest.approx(0.0944258001942241, rel=1e-14)


@pytest.mark.parametrize("t", [0.0, 2.0, 5.0, 40.0])
def test_bkw_moments(t):
    m = compute_moments_full(bkw_profile(VG2, t), VG2)
    assert m.rho[0] == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(m.u[0], 0.0, atol=1e-12)
    assert m.T[0] == pytest.approx(1.0, abs=1e-9)


def test_bkw_relaxes_to_unit_maxwellian():
    M = maxwellian([1.0], [[0.0, 0.0]], [1.0], VG2)[0]
    assert np.abs(bkw_profile(VG2, 400.0) - M).max() < 1e-12


@pytest.mark.parametrize("t", [0.5, 2.0, 6.0])
def test_bkw_time_derivative_matches_finite_difference(t):
    h = 1e-4
    fd = (bkw_profile(VG2, t + h) - bkw_profile(VG2, t - h)) / (2 * h)
    np.testing.assert_allclose(bkw_time_derivative(VG2, t), fd, atol=1e-10)


def test_bkw_requires_2d_grid():
    with pytest.raises(ContractError):
        bkw_profile(VG1, 2.0)
