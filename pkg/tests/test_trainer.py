# coding=utf-8
import os

import numpy as np
import pytest

from pytdnerf.errors import ConfigError
from pytdnerf.pyfield import precision
from pytdnerf.pyrender.march import SampleBatch
from pytdnerf.pyrender.occupancy import OccupancyGrid
from pytdnerf.pytrain.adam import AdamConfig, AdamState, adam_step
from pytdnerf.pytrain.trainer import (Tile, TrainConfig, TrainState, accumulate_gradients, build_tile, pack_rays,
                                      tile_gradients, train, train_step, update_sbar)


def small_config(**kwargs):
    base = dict(steps=3, batch=128, tile=64, accumulation=2, max_samples=32, occ_resolution=16,
                grid_update_every=2, eval_every=0, checkpoint_every=0, seed=3, verbose=False)
    base.update(kwargs)
    return TrainConfig(**base)


def test_config_rejects_inconsistent_batch():
    with pytest.raises(ConfigError):
        TrainConfig(batch=8000, tile=1024, accumulation=8)
    with pytest.raises(ConfigError):
        TrainConfig(img_per_step=0)
    with pytest.raises(ConfigError):
        TrainConfig(grid_update_every=0)
    assert TrainConfig().batch == 8192


def test_pack_rays():
    assert pack_rays([3, 4, 5], 7) == 2
    assert pack_rays([3, 4, 5], 12) == 3
    assert pack_rays([9], 8) == 0
    assert pack_rays([], 8) == 0


def test_tile_respects_its_cap(scene, model64):
    rng = np.random.default_rng(0)
    tile = build_tile(scene, model64, OccupancyGrid(resolution=8), rng, 64, sbar=8.0, max_samples=20)
    assert tile.sample_count <= 64
    assert len(tile.targets) == tile.ray_count
    assert tile.batch.samples_per_ray().max() <= 20
    assert update_sbar(16.0, tile, 0.5) >= 1.0


def test_accumulated_tiles_equal_one_big_batch(scene, model64):
    rng = np.random.default_rng(1)
    grid = OccupancyGrid(resolution=8)
    tiles = [build_tile(scene, model64, grid, rng, 48, sbar=12.0, max_samples=12) for _ in range(8)]
    loss, grads = accumulate_gradients(model64, tiles, background=1.0)
    joined = Tile(batch=SampleBatch.concatenate([t.batch for t in tiles]),
                  targets=np.concatenate([t.targets for t in tiles]),
                  frame_ids=np.concatenate([t.frame_ids for t in tiles]))
    big_loss, big_grads = tile_gradients(model64, joined, background=1.0)
    assert loss == pytest.approx(big_loss, rel=1e-10)
    for name, g in big_grads.items():
        assert np.abs(grads[name] - g).max() < 1e-6


def test_train_step_moves_the_model(scene):
    config = small_config()
    state = TrainState.fresh(scene, config, precision_mode=precision.FULL32)
    before = {k: v.copy() for k, v in state.model.named_tensors().items()}
    loss = train_step(state, scene, config, frame_ids=[0, 1])
    assert np.isfinite(loss)
    assert state.step == 1
    assert state.frames_seen <= {0, 1}
    assert any(not np.array_equal(before[k], v) for k, v in state.model.named_tensors().items())


def test_occupancy_refresh_schedule(scene):
    config = small_config(steps=5)
    result = train(scene, config)
    # refreshes run before steps 3 and 5 (state.step 2 and 4)
    assert result.occupancy.updates == 2
    assert len(result.log) == 5


def test_runs_are_deterministic(scene):
    config = small_config()
    a = train(scene, config, precision_mode=precision.FULL64)
    b = train(scene, config, precision_mode=precision.FULL64)
    for k, v in a.model.named_tensors().items():
        assert np.array_equal(v, b.model.named_tensors()[k])
    assert a.log.losses == b.log.losses


def test_mixed_precision_training(scene):
    result = train(scene, small_config(steps=2), precision_mode=precision.MIXED16)
    assert result.model.grid.tables[0].dtype == np.float16
    assert result.adam.masters["grid.level0"].dtype == np.float32
    assert all(np.isfinite(loss) for loss in result.log.losses)


def test_outputs_on_disk(scene, tmp_path):
    out = str(tmp_path / "run")
    config = small_config(steps=2, eval_every=2, eval_frames=1, checkpoint_every=1)
    result = train(scene, config, out_dir=out)
    for name in ("train_log.csv", "render_log.csv", "final.tdnf", "step_000001.tdnf",
                 os.path.join("renders", "step_000002.png")):
        assert os.path.exists(os.path.join(out, name)), name
    assert result.log.rows[-1]["psnr"] is not None
    assert len(result.checkpoints) == 2


def test_accumulated_step_moves_parameters_like_one_big_step(scene, model64):
    rng = np.random.default_rng(6)
    grid = OccupancyGrid(resolution=8)
    tiles = [build_tile(scene, model64, grid, rng, 32, sbar=8.0, max_samples=8) for _ in range(8)]
    _, grads = accumulate_gradients(model64, tiles, background=1.0)
    joined = Tile(batch=SampleBatch.concatenate([t.batch for t in tiles]),
                  targets=np.concatenate([t.targets for t in tiles]),
                  frame_ids=np.concatenate([t.frame_ids for t in tiles]))
    _, big_grads = tile_gradients(model64, joined, background=1.0)
    config = AdamConfig(lr=1e-2, eps=1e-8)
    stepped = model64.copy()
    big = model64.copy()
    adam_step(AdamState(stepped), stepped, grads, config)
    adam_step(AdamState(big), big, big_grads, config)
    for name, value in big.named_tensors().items():
        assert np.allclose(stepped.named_tensors()[name], value, rtol=1e-6, atol=1e-12), name


def test_overfitting_one_frame_lowers_the_loss(scene, tiny_grid_config):
    config = small_config(steps=60, batch=512, tile=512, accumulation=1, max_samples=16, grid_update_every=1000)
    result = train(scene, config, frame_ids=[0], grid_config=tiny_grid_config)
    window = 20
    average = np.convolve(result.log.losses, np.ones(window) / window, mode="valid")
    assert np.isfinite(average).all()
    assert average[-1] < average[0]
