# coding=utf-8
"""
Purpose:   [1] build 1024-sample tiles of whole rays from random pixels of random frames
           [2] accumulate tile gradients into full-precision buffers, one Adam step per effective batch
           [3] occupancy refresh every grid_update_every steps (before that step's update)
           [4] training loop with periodic evaluation renders, csv log and checkpoints

Usage:     This code depends on the numpy pandas tqdm
           This code is compatible with python 3.8.x.

Examples:  result = train(scene, TrainConfig(steps=10000), out_dir="runs/lego")
           result.log.write_csv("runs/lego/train_log.csv")

"""

import logging
import os
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from pytdnerf.errors import ConfigError, ContractError
from pytdnerf.pydata.sampler import sample_training_pixels
from pytdnerf.pydata.scene import generate_rays
from pytdnerf.pyencode.hashgrid import HashGridConfig
from pytdnerf.pyfield import precision
from pytdnerf.pyfield.field import FieldModel, field_backward, field_forward
from pytdnerf.pyproduct.file import save_checkpoint
from pytdnerf.pyproduct.image import save_png
from pytdnerf.pyproduct.report import write_csv
from pytdnerf.pyrender.composite import composite, composite_backward
from pytdnerf.pyrender.march import MAX_SAMPLES, SampleBatch, march_rays
from pytdnerf.pyrender.occupancy import DECAY, RESOLUTION, THRESHOLD, OccupancyGrid, update_grid
from pytdnerf.pytrain.adam import AdamConfig, AdamState, adam_step
from pytdnerf.pytrain.evaluate import evaluate_split
from pytdnerf.pytrain.loss import HUBER_DELTA, huber_loss

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["step", "loss", "psnr", "elapsed_ms", "ssim", "samples_per_ray", "skipped"]
RENDER_LOG_COLUMNS = ["step", "psnr", "mean_samples_per_pixel"]


@dataclass
class TrainConfig:
    steps: int = 10000
    batch: int = 8192
    tile: int = 1024
    accumulation: int = 8
    img_per_step: int = 1
    lr: float = 1e-2
    betas: Tuple[float, float] = (0.9, 0.99)
    eps_adam: float = 1e-15
    weight_decay_mlp: float = 1e-6
    huber_delta: float = HUBER_DELTA
    grid_update_every: int = 256
    seed: int = 42
    max_samples: int = MAX_SAMPLES
    sbar_init: float = 16.0
    sbar_decay: float = 0.9
    background: Optional[float] = None
    occ_resolution: int = RESOLUTION
    occ_decay: float = DECAY
    occ_threshold: float = THRESHOLD
    eval_every: int = 1000
    eval_frames: int = 5
    checkpoint_every: int = 1000
    check_finite: bool = False
    verbose: bool = True

    def __post_init__(self):
        if self.steps < 0:
            raise ConfigError("steps must be >= 0, got {}".format(self.steps))
        if self.tile < 1 or self.accumulation < 1:
            raise ConfigError("tile and accumulation must be >= 1")
        if self.batch != self.tile * self.accumulation:
            raise ConfigError("batch {} must equal tile {} x accumulation {}".format(
                self.batch, self.tile, self.accumulation))
        if self.img_per_step < 1:
            raise ConfigError("img_per_step must be >= 1, got {}".format(self.img_per_step))
        if self.grid_update_every < 1:
            raise ConfigError("grid_update_every must be >= 1, got {}".format(self.grid_update_every))
        if not 0.0 <= self.sbar_decay < 1.0:
            raise ConfigError("sbar_decay must lie in [0, 1), got {}".format(self.sbar_decay))
        self.betas = tuple(self.betas)

    def adam_config(self):
        return AdamConfig(lr=self.lr, betas=self.betas, eps=self.eps_adam, weight_decay=self.weight_decay_mlp)

    def resolve_background(self, scene):
        """
        None means the constant the scene was composited on
        """
        return scene.background if self.background is None else self.background

    def new_occupancy(self):
        return OccupancyGrid(resolution=self.occ_resolution, decay=self.occ_decay, threshold=self.occ_threshold)


class TrainLog():
    def __init__(self):
        self.rows = []
        self.render_rows = []

    def __len__(self):
        return len(self.rows)

    def add_step(self, step, loss, elapsed_ms, samples_per_ray=None, skipped=0):
        self.rows.append({"step": int(step), "loss": float(loss), "psnr": None, "elapsed_ms": float(elapsed_ms),
                          "ssim": None, "samples_per_ray": samples_per_ray, "skipped": int(skipped)})

    def add_eval(self, step, psnr, ssim, samples_per_pixel):
        for row in reversed(self.rows):
            if row["step"] == step:
                row["psnr"], row["ssim"] = float(psnr), float(ssim)
                break
        self.render_rows.append({"step": int(step), "psnr": float(psnr),
                                 "mean_samples_per_pixel": float(samples_per_pixel)})

    @property
    def losses(self):
        return [r["loss"] for r in self.rows]

    def write_csv(self, path):
        return write_csv(self.rows, path, columns=LOG_COLUMNS)

    def write_render_csv(self, path):
        return write_csv(self.render_rows, path, columns=RENDER_LOG_COLUMNS)


class TrainState():
    def __init__(self, model, occupancy, adam=None, rng=None, seed=42, sbar=16.0):
        """
        everything one training loop mutates
        :param model: FieldModel
        :param occupancy: OccupancyGrid
        :param adam: AdamState, created from the model when None
        :param rng: numpy Generator for pixels and occupancy jitter
        """
        self.model = model
        self.occupancy = occupancy
        self.adam = AdamState(model) if adam is None else adam
        self.rng = np.random.default_rng(seed) if rng is None else rng
        self.sbar = float(sbar)
        self.step = 0
        self.frames_seen = set()
        self.log = TrainLog()

    @classmethod
    def fresh(cls, scene, config, grid_config=None, precision_mode=precision.FULL32):
        rng = np.random.default_rng(config.seed)
        model = FieldModel(grid_config or HashGridConfig(), channels=scene.channels,
                           precision_mode=precision_mode, rng=rng)
        return cls(model, config.new_occupancy(), rng=rng, sbar=config.sbar_init)


@dataclass
class Tile:
    batch: SampleBatch
    targets: np.ndarray
    frame_ids: np.ndarray

    @property
    def ray_count(self):
        return self.batch.ray_count

    @property
    def sample_count(self):
        return len(self.batch)


def pack_rays(counts, tile_size):
    """
    number of leading rays whose samples fit in tile_size (rays are never split)
    """
    if len(counts) == 0:
        return 0
    return int(np.searchsorted(np.cumsum(counts), tile_size, side="right"))


def build_tile(scene, model, grid, rng, tile_size, sbar, img_per_step=1, frame_ids=None,
               max_samples=MAX_SAMPLES):
    """
    :param scene: Scene
    :param model: FieldModel (unused while building, tiles depend only on the grid)
    :param grid: OccupancyGrid
    :param rng: numpy Generator
    :param tile_size: sample cap of the tile
    :param sbar: running samples-per-ray estimate, R = max(1, floor(tile_size / sbar)) rays are drawn
    :param frame_ids: frames the caller owns
    :return: Tile
    """
    n_rays = max(1, int(np.floor(tile_size / max(sbar, 1.0))))
    pixels = sample_training_pixels(scene, rng, n_rays, img_per_step, frame_ids)
    origins = np.empty((n_rays, 3))
    directions = np.empty((n_rays, 3))
    t_near = np.empty(n_rays)
    t_far = np.empty(n_rays)
    for frame in np.unique(pixels.frame_ids):
        idx = np.nonzero(pixels.frame_ids == frame)[0]
        o, d, tn, tf = generate_rays(scene.cameras[frame], pixels.us[idx], pixels.vs[idx], scene.bounds)
        origins[idx], directions[idx], t_near[idx], t_far[idx] = o, d, tn, tf
    batch = march_rays(origins, directions, t_near, t_far, grid, max_samples=min(max_samples, tile_size))
    keep = pack_rays(batch.samples_per_ray(), tile_size)
    if keep < batch.ray_count:
        batch = batch.select_rays(np.arange(keep))
    return Tile(batch=batch, targets=pixels.targets[:keep], frame_ids=pixels.frame_ids[:keep])


def update_sbar(sbar, tile, decay):
    """
    EMA of samples per ray, floored at 1
    """
    if tile.ray_count == 0:
        return sbar
    mean = tile.sample_count / tile.ray_count
    return max(1.0, decay * sbar + (1.0 - decay) * mean)


def tile_gradients(model, tile, background=1.0, delta=HUBER_DELTA, normalizer=None):
    """
    forward + backward of one tile
    :return: loss share, name -> float64 gradient
    """
    batch = tile.batch
    out = field_forward(model, batch.positions, batch.directions)
    result = composite(out.sigma, out.color, batch.dt, batch.ray_id, batch.ray_count, background)
    loss, d_pred = huber_loss(result.color, tile.targets, delta, normalizer)
    d_sigma, d_c = composite_backward(result.cache, d_pred)
    grads = field_backward(model, out.cache, d_sigma, d_c)
    return loss, grads


def accumulate_gradients(model, tiles, background=1.0, delta=HUBER_DELTA):
    """
    sum tile gradients; every tile is normalized by the element count of all tiles together,
    so the sum equals the gradient of the concatenated batch
    :return: step loss (mean over all ray channels), name -> float64 gradient
    """
    normalizer = sum(t.targets.size for t in tiles)
    total = OrderedDict((k, np.zeros(v.shape, dtype=np.float64)) for k, v in model.named_tensors().items())
    loss = 0.0
    for tile in tiles:
        part, grads = tile_gradients(model, tile, background, delta, normalizer)
        loss += part
        for k, g in grads.items():
            total[k] += g
    return loss, total


def train_step(state, scene, config, frame_ids=None):
    """
    one optimizer step over config.accumulation tiles; an occupancy refresh runs first on
    every positive multiple of grid_update_every
    :param state: TrainState
    :param scene: Scene
    :param config: TrainConfig
    :param frame_ids: the caller's partition, defaults to all training frames
    :return: step loss
    """
    if state.step > 0 and state.step % config.grid_update_every == 0:
        update_grid(state.occupancy, state.model, state.rng)
    tiles = []
    for _ in range(config.accumulation):
        tile = build_tile(scene, state.model, state.occupancy, state.rng, config.tile, state.sbar,
                          config.img_per_step, frame_ids, config.max_samples)
        state.sbar = update_sbar(state.sbar, tile, config.sbar_decay)
        state.frames_seen.update(int(f) for f in tile.frame_ids)
        tiles.append(tile)
    loss, grads = accumulate_gradients(state.model, tiles, config.resolve_background(scene), config.huber_delta)
    adam_step(state.adam, state.model, grads, config.adam_config())
    state.step += 1
    if config.check_finite and not (state.adam.is_finite() and
                                    all(np.all(np.isfinite(t)) for t in state.model.named_tensors().values())):
        raise ContractError("non-finite parameters or optimizer state after step {}".format(state.step))
    return loss


def run_steps(state, scene, config, n_steps, frame_ids=None, verbose=None, desc="train", on_step=None):
    """
    n_steps train steps continuing from state.step; every step is logged
    :param on_step: optional callable(state) after each step
    """
    verbose = config.verbose if verbose is None else verbose
    for _ in tqdm(range(int(n_steps)), desc=desc, disable=not verbose, leave=False):
        start = time.time()
        loss = train_step(state, scene, config, frame_ids)
        state.log.add_step(state.step, loss, 1000.0 * (time.time() - start), samples_per_ray=state.sbar,
                           skipped=state.adam.skipped)
        if on_step is not None:
            on_step(state)
    return state


@dataclass
class TrainResult:
    model: FieldModel
    occupancy: OccupancyGrid
    log: TrainLog
    adam: AdamState
    checkpoints: List[str] = field(default_factory=list)


def train(scene, config, out_dir=None, frame_ids=None, grid_config=None, precision_mode=precision.FULL32,
          state=None):
    """
    full training loop
    :param scene: Scene
    :param config: TrainConfig
    :param out_dir: where renders/, train_log.csv, render_log.csv and .tdnf checkpoints go; None keeps everything in memory
    :param frame_ids: training frames, defaults to the train split
    :param state: continue an existing TrainState instead of a fresh one
    :return: TrainResult
    """
    state = TrainState.fresh(scene, config, grid_config, precision_mode) if state is None else state
    checkpoints = []
    eval_ids = scene.test_ids or scene.train_ids

    def periodic(st):
        if config.eval_every and st.step % config.eval_every == 0 and eval_ids:
            ev = evaluate_split(st.model, st.occupancy, scene, frame_ids=eval_ids, max_frames=config.eval_frames,
                                background=config.resolve_background(scene), keep_images=out_dir is not None)
            st.log.add_eval(st.step, ev.mean_psnr, ev.mean_ssim, ev.mean_samples_per_pixel)
            if out_dir is not None and ev.images:
                frame = sorted(ev.images)[0]
                save_png(ev.images[frame], os.path.join(out_dir, "renders", "step_{:06d}.png".format(st.step)))
        if out_dir is not None and config.checkpoint_every and st.step % config.checkpoint_every == 0 \
                and st.step < config.steps:
            checkpoints.append(save_checkpoint(os.path.join(out_dir, "step_{:06d}.tdnf".format(st.step)),
                                               st.model, st.occupancy, st.adam, config.resolve_background(scene)))

    logger.info("training %d steps, B=%d (%d x %d), T=2^%d, %s", config.steps, config.batch, config.accumulation,
                config.tile, state.model.grid_config.log2_table_size, state.model.precision_mode)
    run_steps(state, scene, config, config.steps - state.step if state.step < config.steps else 0, frame_ids,
              on_step=periodic)
    if out_dir is not None:
        checkpoints.append(save_checkpoint(os.path.join(out_dir, "final.tdnf"), state.model, state.occupancy,
                                           state.adam, config.resolve_background(scene)))
        state.log.write_csv(os.path.join(out_dir, "train_log.csv"))
        state.log.write_render_csv(os.path.join(out_dir, "render_log.csv"))
    return TrainResult(model=state.model, occupancy=state.occupancy, log=state.log, adam=state.adam,
                       checkpoints=checkpoints)
