import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otloc.spatial import cost_matrix, make_grid

SQUARE = ((-0.5, 0.5), (-0.5, 0.5))


def test_make_grid_2x2_cell_centers():
    grid = make_grid(SQUARE, (2, 2))
    expected = np.array([[-0.25, -0.25], [-0.25, 0.25], [0.25, -0.25], [0.25, 0.25]])
    np.testing.assert_allclose(grid.points, expected, atol=1e-15)
    assert grid.n == 4


def test_make_grid_1x1_is_center():
    grid = make_grid(SQUARE, (1, 1))
    np.testing.assert_allclose(grid.points, [[0.0, 0.0]], atol=1e-15)


@pytest.mark.parametrize("resolution", [(3, 3), (7, 5), (40, 40)])
def test_make_grid_points_inside_bounds(resolution):
    grid = make_grid(SQUARE, resolution)
    assert grid.n == resolution[0] * resolution[1]
    (x0, x1), (y0, y1) = SQUARE
    assert np.all(grid.points[:, 0] > x0) and np.all(grid.points[:, 0] < x1)
    assert np.all(grid.points[:, 1] > y0) and np.all(grid.points[:, 1] < y1)


def test_make_grid_no_duplicates():
    grid = make_grid(SQUARE, (6, 4))
    assert len({tuple(p) for p in grid.points}) == grid.n


def test_make_grid_row_major_ordering():
    grid = make_grid(SQUARE, (3, 2))
    nx, ny = grid.resolution
    for i in range(nx):
        for j in range(ny):
            point = grid.points[i * ny + j]
            assert point[0] == grid.points[i * ny][0]
    # y varies fastest
    assert grid.points[0, 1] != grid.points[1, 1]
    assert grid.points[0, 0] == grid.points[1, 0]


@pytest.mark.parametrize("resolution", [(0, 2), (2, 0), (-1, 3)])
def test_make_grid_rejects_bad_resolution(resolution):
    with pytest.raises(ValueError):
        make_grid(SQUARE, resolution)


def test_make_grid_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        make_grid(((0.5, -0.5), (-0.5, 0.5)), (2, 2))
    with pytest.raises(ValueError):
        make_grid(((0.0, 0.0), (-0.5, 0.5)), (2, 2))


def test_grid_points_are_read_only():
    grid = make_grid(SQUARE, (2, 2))
    with pytest.raises(ValueError):
        grid.points[0, 0] = 1.0


def test_cost_matrix_unit_distance():
    grid = make_grid(((-0.5, 1.5), (-0.25, 0.25)), (2, 1))  # points (0,0) and (1,0)
    np.testing.assert_allclose(grid.points, [[0.0, 0.0], [1.0, 0.0]], atol=1e-15)
    cost = cost_matrix(grid)
    np.testing.assert_allclose(cost, [[0.0, 1.0], [1.0, 0.0]], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(
    nx=st.integers(1, 6),
    ny=st.integers(1, 6),
    width=st.floats(0.1, 10.0),
    height=st.floats(0.1, 10.0),
)
def test_cost_matrix_symmetry_zero_diagonal_bounded(nx, ny, width, height):
    grid = make_grid(((0.0, width), (0.0, height)), (nx, ny))
    cost = cost_matrix(grid)
    assert np.array_equal(cost, cost.T)
    assert np.all(np.diag(cost) == 0.0)
    assert np.all(cost >= 0.0)
    assert cost.max() <= width**2 + height**2 + 1e-12


def test_cost_matrix_permutation_consistency():
    grid = make_grid(SQUARE, (3, 3))
    cost = cost_matrix(grid)
    perm = np.random.default_rng(0).permutation(grid.n)
    from otloc.spatial import Grid

    permuted = Grid(points=grid.points[perm], bounds=grid.bounds,
                    resolution=grid.resolution)
    np.testing.assert_array_equal(cost_matrix(permuted), cost[np.ix_(perm, perm)])
