# coding=utf-8
"""
Purpose:   [1] render a full camera image: march -> field -> composite
           [2] samples stream through the field in fixed 1024-sample tiles across ray chunks
           [3] stats: emitted samples per pixel, forward tiles, wall time

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  image, stats = render_image(model, occ_grid, camera, background=1.0)

"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from pytdnerf.pydata.scene import UNIT_BOUNDS, generate_rays, pixel_grid
from pytdnerf.pyfield.field import field_forward
from pytdnerf.pyrender.composite import composite
from pytdnerf.pyrender.march import MAX_SAMPLES, march_rays

logger = logging.getLogger(__name__)

TILE = 1024
RAY_CHUNK = 2048


@dataclass
class RenderStats:
    pixels: int
    total_samples: int
    tiles: int
    elapsed_ms: float

    @property
    def mean_samples_per_pixel(self):
        return self.total_samples / self.pixels if self.pixels else 0.0


class TileStream():
    """
    buffers marched samples and runs the field on full tiles only; rays are composited once
    every one of their samples has been through the field
    """

    def __init__(self, model, tile=TILE):
        self.model = model
        self.tile = int(tile)
        self.tiles = 0
        self.pending = []   # marched, not yet evaluated
        self.ready = []     # evaluated, ray possibly incomplete

    def _pending_count(self):
        return sum(len(p[0]) for p in self.pending)

    def _evaluate(self, count):
        pos = np.concatenate([p[0] for p in self.pending])
        dirs = np.concatenate([p[1] for p in self.pending])
        dt = np.concatenate([p[2] for p in self.pending])
        ray = np.concatenate([p[3] for p in self.pending])
        for start in range(0, count, self.tile):
            stop = min(start + self.tile, count)
            out = field_forward(self.model, pos[start:stop], dirs[start:stop])
            self.ready.append((out.sigma, out.color, dt[start:stop], ray[start:stop]))
            self.tiles += 1
        self.pending = [(pos[count:], dirs[count:], dt[count:], ray[count:])] if count < len(ray) else []

    def push(self, positions, directions, dt, ray_id):
        self.pending.append((positions, directions, dt, ray_id))
        n = self._pending_count()
        full = (n // self.tile) * self.tile
        if full:
            self._evaluate(full)

    def flush(self):
        n = self._pending_count()
        if n:
            self._evaluate(n)

    def pop_complete(self, before_ray=None):
        """
        evaluated samples of rays < before_ray (all when None); they leave the stream
        """
        if not self.ready:
            return None
        sigma = np.concatenate([r[0] for r in self.ready])
        color = np.concatenate([r[1] for r in self.ready])
        dt = np.concatenate([r[2] for r in self.ready])
        ray = np.concatenate([r[3] for r in self.ready])
        cut = len(ray) if before_ray is None else int(np.searchsorted(ray, before_ray, side="left"))
        self.ready = [(sigma[cut:], color[cut:], dt[cut:], ray[cut:])] if cut < len(ray) else []
        return sigma[:cut], color[:cut], dt[:cut], ray[:cut]

    def first_pending_ray(self):
        for p in self.pending:
            if len(p[3]):
                return int(p[3][0])
        return None


def render_rays(model, grid, origins, directions, t_near, t_far, background=1.0, max_samples=MAX_SAMPLES,
                tile=TILE, ray_chunk=RAY_CHUNK):
    """
    :return: colors (n, channels), opacity (n,), RenderStats (pixels = n)
    """
    start_time = time.time()
    n = origins.shape[0]
    channels = model.channels
    bg = np.broadcast_to(np.asarray(background, dtype=np.float64), (channels,))
    color_sum = np.zeros((n, channels))
    opacity = np.zeros(n)
    stream = TileStream(model, tile)
    total = 0

    def composite_ready(before_ray):
        chunk = stream.pop_complete(before_ray)
        if chunk is None or len(chunk[3]) == 0:
            return
        sigma, color, dt, ray = chunk
        result = composite(sigma, color, dt, ray, n, background=0.0)
        color_sum[:] += result.color
        opacity[:] += result.opacity

    for lo in range(0, n, ray_chunk):
        hi = min(lo + ray_chunk, n)
        batch = march_rays(origins[lo:hi], directions[lo:hi], t_near[lo:hi], t_far[lo:hi], grid,
                           max_samples=max_samples)
        total += len(batch)
        if len(batch):
            stream.push(batch.positions, batch.directions, batch.dt, batch.ray_id + lo)
        waiting = stream.first_pending_ray()
        composite_ready(hi if waiting is None else waiting)
    stream.flush()
    composite_ready(None)

    colors = color_sum + (1.0 - opacity)[:, None] * bg[None, :]
    stats = RenderStats(pixels=n, total_samples=total, tiles=stream.tiles,
                        elapsed_ms=1000.0 * (time.time() - start_time))
    return colors, opacity, stats


def render_image(model, grid, camera, background=1.0, max_samples=MAX_SAMPLES, tile=TILE, ray_chunk=RAY_CHUNK,
                 bounds=UNIT_BOUNDS):
    """
    render every pixel of a camera
    :param model: FieldModel
    :param grid: OccupancyGrid
    :param camera: Camera
    :param background: scalar or per-channel
    :return: image (height, width, channels) float64 in [0,1], RenderStats
    """
    us, vs = pixel_grid(camera)
    origins, directions, t_near, t_far = generate_rays(camera, us, vs, bounds)
    colors, _, stats = render_rays(model, grid, origins, directions, t_near, t_far, background=background,
                                   max_samples=max_samples, tile=tile, ray_chunk=ray_chunk)
    image = np.clip(colors, 0.0, 1.0).reshape(camera.height, camera.width, model.channels)
    logger.debug("rendered %dx%d: %.2f samples/pixel, %d tiles, %.0f ms", camera.width, camera.height,
                 stats.mean_samples_per_pixel, stats.tiles, stats.elapsed_ms)
    return image, stats
