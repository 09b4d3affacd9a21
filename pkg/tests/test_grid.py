import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dlrboltz.errors import ConfigError, ContractError
from dlrboltz.grid import SpatialGrid, VelocityGrid, ghost_fill, inner_product_v, inner_product_x


def test_spatial_grid_cell_centres():
    g = SpatialGrid(n_x=4, x_min=0.0, x_max=2.0)
    assert g.dx == 0.5
    np.testing.assert_allclose(g.x, [0.25, 0.75, 1.25, 1.75])
    assert g.weight == g.dx


def test_velocity_grid_nodes_exclude_right_end():
    g = VelocityGrid(n_v=4, L_v=2.0, d_v=1)
    np.testing.assert_allclose(g.nodes, [-2.0, -1.0, 0.0, 1.0])
    assert g.size == 4
    assert g.weight == 1.0


def test_velocity_grid_2d_row_major():
    g = VelocityGrid(n_v=4, L_v=2.0, d_v=2)
    v1, v2 = g.component(0), g.component(1)
    assert g.size == 16
    np.testing.assert_allclose(v1[:4], -2.0)
    np.testing.assert_allclose(v2[:4], [-2.0, -1.0, 0.0, 1.0])
    np.testing.assert_allclose(g.speed_sq, v1**2 + v2**2)
    assert g.weight == 1.0


def test_velocity_component_is_read_only():
    g = VelocityGrid(8, 1.0, 2)
    with pytest.raises(ValueError):
        g.v1[0] = 3.0


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"n_v": 7}, "n_v"),
        ({"n_v": 2}, "n_v"),
        ({"L_v": 0.0}, "L_v"),
        ({"d_v": 3}, "d_v"),
    ],
)
def test_velocity_grid_rejects_bad_parameters(kwargs, field):
    with pytest.raises(ConfigError) as info:
        VelocityGrid(**kwargs)
    assert info.value.field == field


def test_spatial_grid_rejects_bad_parameters():
    with pytest.raises(ConfigError):
        SpatialGrid(n_x=0)
    with pytest.raises(ConfigError):
        SpatialGrid(x_min=1.0, x_max=1.0)
    with pytest.raises(ConfigError):
        SpatialGrid(bc="dirichlet")


def test_component_axis_checked():
    with pytest.raises(ContractError):
        VelocityGrid(8, 1.0, 1).component(1)


def test_inner_products_integrate_polynomials():
    xg = SpatialGrid(n_x=50)
    # midpoint rule is exact for linear integrands
    assert inner_product_x(xg.x, np.ones(50), xg) == pytest.approx(0.5, abs=1e-14)
    vg = VelocityGrid(32, 8.4, 2)
    gauss = np.exp(-vg.speed_sq / 2) / (2 * np.pi)
    assert inner_product_v(gauss, np.ones(vg.size), vg) == pytest.approx(1.0, abs=1e-12)
    assert inner_product_v(gauss, vg.speed_sq, vg) == pytest.approx(2.0, abs=1e-10)


def test_inner_product_length_mismatch():
    with pytest.raises(ContractError):
        inner_product_x(np.ones(3), np.ones(4), SpatialGrid(n_x=3))


def test_ghost_fill_periodic_and_neumann():
    q = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(ghost_fill(q, "periodic", 2), [3, 4, 1, 2, 3, 4, 1, 2])
    np.testing.assert_array_equal(ghost_fill(q, "neumann", 2), [1, 1, 1, 2, 3, 4, 4, 4])
    with pytest.raises(ContractError):
        ghost_fill(q, "periodic", 0)


@given(st.integers(4, 40), st.integers(1, 3), st.sampled_from(["periodic", "neumann"]))
def test_ghost_fill_keeps_interior(n, width, bc):
    q = np.arange(float(n)).reshape(n, 1) * np.ones((1, 3))
    padded = ghost_fill(q, bc, width)
    assert padded.shape == (n + 2 * width, 3)
    np.testing.assert_array_equal(padded[width:-width], q)
