# coding=utf-8
"""
Purpose:   [1] density EMA volume (float16) + occupancy bits used to skip empty space
           [2] full-grid refresh: one jittered density query per cell, chunked, swapped in when complete

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  grid = OccupancyGrid()               # warm-up: every cell occupied
           update_grid(grid, model, rng)
           flags = is_occupied(grid, positions)

"""

import logging
from functools import partial

import numpy as np

from pytdnerf.errors import ContractError
from pytdnerf.pyfield.field import field_density

logger = logging.getLogger(__name__)

RESOLUTION = 128
DECAY = 0.95
THRESHOLD = 0.01
MARCH_STEP = np.sqrt(3.0) / 1024.0
SWEEP_CHUNK = 65536
F16_MAX = float(np.finfo(np.float16).max)


class OccupancyGrid():
    def __init__(self, resolution=RESOLUTION, decay=DECAY, threshold=THRESHOLD, march_step=MARCH_STEP,
                 density_ema=None, bits=None):
        """
        cells are indexed [ix, iy, iz]; a fresh grid is in warm-up (all bits set, EMA zero)
        :param resolution: cells per axis
        :param decay: EMA factor per refresh
        :param threshold: opacity a single marching step must exceed for a cell to count as occupied
        :param march_step: the marching dt the threshold refers to
        """
        if resolution < 1:
            raise ContractError("occupancy resolution must be >= 1, got {}".format(resolution))
        self.resolution = int(resolution)
        self.decay = float(decay)
        self.threshold = float(threshold)
        self.march_step = float(march_step)
        shape = (self.resolution,) * 3
        if density_ema is None:
            density_ema = np.zeros(shape, dtype=np.float16)
        if bits is None:
            bits = np.ones(shape, dtype=bool)
        self.density_ema = np.asarray(density_ema, dtype=np.float16).reshape(shape)
        self.bits = np.asarray(bits, dtype=bool).reshape(shape)
        self.updates = 0

    def bits_from_ema(self, density_ema=None):
        ema = self.density_ema if density_ema is None else density_ema
        return ema.astype(np.float32) * np.float32(self.march_step) > np.float32(self.threshold)

    def recompute_bits(self):
        self.bits = self.bits_from_ema()
        return self.bits

    @property
    def occupied_fraction(self):
        return float(self.bits.mean())

    @property
    def ema_bytes(self):
        return int(self.density_ema.size * 2)

    @property
    def bit_bytes(self):
        return int((self.bits.size + 7) // 8)

    def copy(self):
        other = OccupancyGrid(self.resolution, self.decay, self.threshold, self.march_step,
                              density_ema=self.density_ema.copy(), bits=self.bits.copy())
        other.updates = self.updates
        return other


def cell_indices(grid, x):
    """
    floor(x * res) clamped to [0, res - 1], per axis
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1, 3)
    return np.clip(np.floor(x * grid.resolution), 0, grid.resolution - 1).astype(np.int64)


def is_occupied(grid, x):
    """
    :param grid: OccupancyGrid
    :param x: (3,) or (n, 3) positions in [0,1]^3
    :return: bool for a single position, bool array (n,) otherwise
    """
    arr = np.asarray(x, dtype=np.float64)
    idx = cell_indices(grid, arr)
    flags = grid.bits[idx[:, 0], idx[:, 1], idx[:, 2]]
    if arr.ndim == 1:
        return bool(flags[0])
    return flags


def update_grid(grid, model, rng, chunk=SWEEP_CHUNK):
    """
    density_ema <- max(decay * density_ema, sigma(jittered cell point)), then bits from the threshold rule
    :param grid: OccupancyGrid, replaced wholesale at the end
    :param model: FieldModel, or any callable positions (n,3) -> sigma (n,)
    :param rng: numpy Generator for the in-cell jitter
    :param chunk: cells queried per density call
    :return: grid
    """
    if callable(model):
        density = model
    else:
        density = partial(field_density, model)
    res = grid.resolution
    n_cells = res ** 3
    old = grid.density_ema.reshape(-1).astype(np.float32)
    fresh = np.empty(n_cells, dtype=np.float32)
    for start in range(0, n_cells, chunk):
        stop = min(start + chunk, n_cells)
        cells = np.arange(start, stop)
        ijk = np.stack(np.unravel_index(cells, (res, res, res)), axis=1)
        pts = (ijk + rng.random((stop - start, 3))) / res
        sigma = np.asarray(density(pts), dtype=np.float32)
        fresh[start:stop] = np.maximum(np.float32(grid.decay) * old[start:stop], sigma)
    ema = np.minimum(fresh, F16_MAX).astype(np.float16).reshape(res, res, res)
    bits = grid.bits_from_ema(ema)
    grid.density_ema, grid.bits = ema, bits
    grid.updates += 1
    logger.debug("occupancy refresh %d: %.4f of cells occupied", grid.updates, grid.occupied_fraction)
    return grid
