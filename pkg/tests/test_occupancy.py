# coding=utf-8
import numpy as np
import pytest

from pytdnerf.errors import ContractError
from pytdnerf.pyrender.occupancy import MARCH_STEP, THRESHOLD, OccupancyGrid, cell_indices, is_occupied, update_grid


def constant(value):
    return lambda pts: np.full(len(pts), value)


def test_fresh_grid_is_in_warm_up():
    grid = OccupancyGrid(resolution=8)
    assert grid.bits.all()
    assert not grid.density_ema.any()
    assert grid.density_ema.dtype == np.float16
    assert is_occupied(grid, np.array([0.3, 0.3, 0.3])) is True


def test_threshold_rule():
    critical = THRESHOLD / MARCH_STEP
    assert critical == pytest.approx(5.9119, abs=1e-3)
    low = update_grid(OccupancyGrid(resolution=8), constant(5.5), np.random.default_rng(0))
    assert not low.bits.any()
    high = update_grid(OccupancyGrid(resolution=8), constant(6.5), np.random.default_rng(0))
    assert high.bits.all()
    assert high.updates == 1


def test_ema_takes_the_max_of_decayed_and_fresh():
    rng = np.random.default_rng(1)
    grid = update_grid(OccupancyGrid(resolution=4, decay=0.5), constant(100.0), rng)
    update_grid(grid, constant(10.0), rng)
    assert np.allclose(grid.density_ema.astype(np.float32), 50.0)
    update_grid(grid, constant(40.0), rng)
    assert np.allclose(grid.density_ema.astype(np.float32), 40.0)
    assert grid.updates == 3


def test_query_points_stay_in_their_cell():
    res = 4
    seen = []

    def probe(pts):
        seen.append(pts)
        return np.zeros(len(pts))

    update_grid(OccupancyGrid(resolution=res), probe, np.random.default_rng(2), chunk=10)
    pts = np.concatenate(seen)
    assert len(pts) == res ** 3
    assert pts.min() >= 0 and pts.max() <= 1
    cells = cell_indices(OccupancyGrid(resolution=res), pts)
    flat = np.ravel_multi_index(cells.T, (res, res, res))
    assert sorted(flat.tolist()) == list(range(res ** 3))


def test_density_depending_on_position():
    # only the x < 0.5 half is dense
    grid = update_grid(OccupancyGrid(resolution=8), lambda p: np.where(p[:, 0] < 0.5, 50.0, 0.0),
                       np.random.default_rng(3))
    assert grid.bits[:4].all() and not grid.bits[4:].any()
    flags = is_occupied(grid, np.array([[0.1, 0.5, 0.5], [0.9, 0.5, 0.5]]))
    assert flags.tolist() == [True, False]
    assert grid.occupied_fraction == pytest.approx(0.5)


def test_field_model_as_density(model64):
    grid = update_grid(OccupancyGrid(resolution=4), model64, np.random.default_rng(4))
    assert grid.density_ema.shape == (4, 4, 4)
    assert np.isfinite(grid.density_ema.astype(np.float32)).all()


def test_sizes_and_copy():
    grid = OccupancyGrid()
    assert grid.ema_bytes == 4194304
    assert grid.bit_bytes == 262144
    other = grid.copy()
    other.bits[0, 0, 0] = False
    assert grid.bits[0, 0, 0]


def test_bad_resolution():
    with pytest.raises(ContractError):
        OccupancyGrid(resolution=0)
