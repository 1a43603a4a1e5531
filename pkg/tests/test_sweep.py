# coding=utf-8
import os

import numpy as np
import pytest

from pytdnerf.errors import ConfigError
from pytdnerf.pybudget.sweep import (SWEEP_COLUMNS, SweepPoint, grid_points, point_budget, rescale_scene, sweep,
                                     tiling)
from pytdnerf.pyproduct.report import read_csv
from pytdnerf.pytrain.trainer import TrainConfig


def test_grid_points_and_selection():
    points = grid_points([4096, 8192], [12, 13])
    assert len(points) == 4
    assert [p.selected for p in points] == [False, False, False, True]
    assert points[0].table_size == 4096


def test_tiling():
    assert tiling(8192) == (1024, 8)
    assert tiling(512) == (512, 1)
    with pytest.raises(ConfigError):
        tiling(3000)


def test_rescale_scene(scene):
    half = rescale_scene(scene, 10)
    assert half.images[0].shape == (10, 10, 3)
    assert half.cameras[0].focal == pytest.approx(scene.cameras[0].focal / 2)
    assert np.allclose(half.images[0][0, 0], 1.0)
    assert rescale_scene(scene, None) is scene


def test_point_budget_grows_with_batch_and_table(scene):
    small = point_budget(SweepPoint(1024, 10), scene)
    assert point_budget(SweepPoint(2048, 10), scene).total > small.total
    assert point_budget(SweepPoint(1024, 12), scene).total > small.total
    assert point_budget(SweepPoint(1024, 10, resolution=10), scene).items["img"] == 10 * 10 * 3


def test_tiny_sweep(scene, tmp_path):
    template = TrainConfig(batch=64, tile=64, accumulation=1, max_samples=16, occ_resolution=8, seed=1,
                           verbose=False)
    points = [SweepPoint(64, 7), SweepPoint(128, 7, resolution=20)]
    rows = sweep(points, scene, template, steps=1, eval_frames=1, out_dir=str(tmp_path))
    assert len(rows) == 2
    assert rows[1]["resolution"] == 20
    assert all(np.isfinite(r["psnr"]) for r in rows)
    frame = read_csv(os.path.join(str(tmp_path), "sweep.csv"))
    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame["selected"].tolist() == [0, 0]


def test_sweep_rejects_empty_input(scene):
    with pytest.raises(ConfigError):
        sweep([], scene, TrainConfig())
    with pytest.raises(ConfigError):
        sweep([SweepPoint(64, 7)], scene, TrainConfig(), runs=0)


class FixedScore:
    def __init__(self, psnr, ssim):
        self.mean_psnr, self.mean_ssim = psnr, ssim


def test_rows_carry_best_and_mean_over_runs(scene, monkeypatch):
    scores = iter([FixedScore(20.0, 0.5), FixedScore(24.0, 0.7), FixedScore(22.0, 0.9)])
    monkeypatch.setattr("pytdnerf.pybudget.sweep.evaluate_split", lambda *args, **kwargs: next(scores))
    template = TrainConfig(batch=64, tile=64, accumulation=1, max_samples=16, occ_resolution=8, seed=1,
                           verbose=False)
    row, = sweep([SweepPoint(64, 7)], scene, template, steps=0, runs=3, eval_frames=1)
    assert row["runs"] == 3
    assert row["psnr"] == 24.0 and row["ssim"] == 0.9
    assert row["psnr_mean"] == pytest.approx(22.0)
    assert row["ssim_mean"] == pytest.approx(0.7)
