# coding=utf-8
"""
Purpose:   [1] (B, T) sweep: train every configuration for a reduced step count, evaluate on the test split,
               join quality with the analytic budget, mark the selected B=8192 / T=2^13 point
           [2] optional img/step and resolution knobs per row, best and mean of `runs` seeds per row

Usage:     This code depends on the numpy pandas
           This code is compatible with python 3.8.x.

Examples:  rows = sweep(grid_points([4096, 8192], [12, 13]), scene, TrainConfig(), steps=2000)
           write_csv(rows, "runs/sweep/sweep.csv", columns=SWEEP_COLUMNS)

"""

import itertools
import logging
import os
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from pytdnerf.errors import ConfigError
from pytdnerf.pybudget.footprint import SceneSpec, default_mlp_dims, memory_footprint
from pytdnerf.pycomputer.pool import run_jobs
from pytdnerf.pydata.scene import Camera, Scene, box_downscale
from pytdnerf.pyencode.hashgrid import HashGridConfig
from pytdnerf.pyfield import precision
from pytdnerf.pyproduct.report import write_csv
from pytdnerf.pyrender.render import TILE
from pytdnerf.pytrain.evaluate import evaluate_split
from pytdnerf.pytrain.trainer import train

logger = logging.getLogger(__name__)

SELECTED_BATCH = 8192
SELECTED_LOG2_T = 13
SWEEP_COLUMNS = ["B", "T_log2", "img_per_step", "resolution", "mem_bytes_total", "mem_bytes_hash",
                 "mem_bytes_grid", "mem_bytes_act", "mem_bytes_opt", "mem_bytes_img", "gops_per_step",
                 "psnr", "ssim", "psnr_mean", "ssim_mean", "runs", "selected"]


@dataclass
class SweepPoint:
    batch: int
    log2_table_size: int
    img_per_step: int = 1
    resolution: Optional[int] = None

    @property
    def table_size(self):
        return 2 ** int(self.log2_table_size)

    @property
    def selected(self):
        return self.batch == SELECTED_BATCH and self.log2_table_size == SELECTED_LOG2_T


def grid_points(batches, log2_tables, img_per_step=1, resolution=None):
    return [SweepPoint(int(b), int(t), img_per_step, resolution) for b, t in itertools.product(batches, log2_tables)]


def tiling(batch, tile=TILE):
    """
    (tile, accumulation) with tile * accumulation == batch
    """
    tile = min(int(tile), int(batch))
    if batch < 1 or batch % tile != 0:
        raise ConfigError("batch {} is not a multiple of the {}-sample tile".format(batch, tile))
    return tile, batch // tile


def rescale_scene(scene, resolution):
    """
    box-downscale every frame to resolution x resolution, focal scaled alike
    """
    if resolution is None or all(c.width == resolution for c in scene.cameras):
        return scene
    cameras, images = [], []
    for cam, img in zip(scene.cameras, scene.images):
        cameras.append(Camera(width=resolution, height=resolution, focal=cam.focal * resolution / cam.width,
                              pose=cam.pose))
        images.append(box_downscale(img, resolution, resolution).astype(np.float32))
    return Scene(cameras=cameras, images=images, channels=scene.channels, split=list(scene.split),
                 bounds=scene.bounds, name=scene.name, background=scene.background)


def point_budget(point, scene, precision_mode=precision.MIXED16):
    grid_config = HashGridConfig(table_size=point.table_size)
    cam = scene.cameras[0]
    spec = SceneSpec(frames=len(scene.train_ids) or len(scene.cameras), width=point.resolution or cam.width,
                     height=point.resolution or cam.height, channels=scene.channels)
    return memory_footprint(grid_config, default_mlp_dims(grid_config, scene.channels), point.batch, spec,
                            precision_mode, point.img_per_step,
                            name="B{}_T{}".format(point.batch, point.log2_table_size))


def _sweep_job(point, scene, train_config, steps, runs, eval_frames, precision_mode):
    scene = rescale_scene(scene, point.resolution)
    tile, accumulation = tiling(point.batch, train_config.tile)
    psnrs, ssims = [], []
    for run in range(int(runs)):
        config = replace(train_config, steps=int(steps), batch=point.batch, tile=tile, accumulation=accumulation,
                         img_per_step=point.img_per_step, seed=train_config.seed + run, eval_every=0,
                         checkpoint_every=0, verbose=False)
        result = train(scene, config, grid_config=HashGridConfig(table_size=point.table_size),
                       precision_mode=precision_mode)
        ev = evaluate_split(result.model, result.occupancy, scene, max_frames=eval_frames,
                            frame_ids=None if scene.test_ids else scene.train_ids,
                            background=config.resolve_background(scene))
        psnrs.append(ev.mean_psnr)
        ssims.append(ev.mean_ssim)
    return psnrs, ssims


def sweep(points, scene, train_config, steps=2000, runs=1, eval_frames=5, threads=1, out_dir=None,
          precision_mode=precision.FULL32, budget_precision=precision.MIXED16):
    """
    :param points: list of SweepPoint
    :param scene: Scene at its loaded resolution (rows with a resolution are downscaled from it)
    :param train_config: TrainConfig template, batch/tile/img_per_step/seed are taken per row
    :param steps: training steps per run
    :param runs: seeds per row; psnr/ssim columns hold the best run, psnr_mean/ssim_mean the average
    :param threads: worker processes, see pycomputer.pool
    :param out_dir: sweep.csv goes here when given
    :return: list of row dicts in SWEEP_COLUMNS order
    """
    if not points:
        raise ConfigError("empty sweep")
    if runs < 1:
        raise ConfigError("runs must be >= 1, got {}".format(runs))
    jobs = [(p, scene, train_config, steps, runs, eval_frames, precision_mode) for p in points]
    logger.info("sweeping %d configurations, %d steps x %d runs each", len(points), steps, runs)
    scores = run_jobs(_sweep_job, jobs, threads)
    rows = []
    for point, (psnrs, ssims) in zip(points, scores):
        score_psnr = float(np.max(psnrs))
        budget = point_budget(point, scene, budget_precision)
        row = budget.as_row()
        rows.append({"B": point.batch, "T_log2": point.log2_table_size, "img_per_step": point.img_per_step,
                     "resolution": point.resolution or scene.cameras[0].width,
                     "mem_bytes_total": row["mem_bytes_total"], "mem_bytes_hash": row["mem_bytes_hash"],
                     "mem_bytes_grid": row["mem_bytes_grid"], "mem_bytes_act": row["mem_bytes_act"],
                     "mem_bytes_opt": row["mem_bytes_opt"], "mem_bytes_img": row["mem_bytes_img"],
                     "gops_per_step": row["gops_per_step"], "psnr": score_psnr, "ssim": float(np.max(ssims)),
                     "psnr_mean": float(np.mean(psnrs)), "ssim_mean": float(np.mean(ssims)), "runs": len(psnrs),
                     "selected": int(point.selected)})
        logger.info("B=%d T=2^%d: %.2f MB, psnr %.2f dB", point.batch, point.log2_table_size,
                    row["mem_bytes_total"] / 1e6, score_psnr)
    if out_dir is not None:
        write_csv(rows, os.path.join(out_dir, "sweep.csv"), columns=SWEEP_COLUMNS)
    return rows
