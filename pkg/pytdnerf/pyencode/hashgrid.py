# coding=utf-8
"""
Purpose:   [1] multi-resolution hash encoding of positions in the unit cube
           [2] dense indexing on coarse levels, xor-prime spatial hash once a level outgrows T
           [3] sparse backward pass: corner index -> accumulated feature gradient

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  grid = HashGrid(HashGridConfig(table_size=2**13), rng=np.random.default_rng(0))
           feats, cache = mrhe_forward(grid, x)
           grads = mrhe_backward(cache, d_feats)

"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from pytdnerf.errors import ConfigError, ContractError

logger = logging.getLogger(__name__)

PRIMES = np.array([1, 2654435761, 805459861], dtype=np.uint32)
INIT_SCALE = 1e-4
# binary offsets of the 8 voxel corners, x fastest
CORNER_OFFSETS = np.array([[(k >> 0) & 1, (k >> 1) & 1, (k >> 2) & 1] for k in range(8)], dtype=np.int64)


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class HashGridConfig:
    """
    levels L, table_size T (power of two), features F per entry, base_resolution N_min,
    growth b; growth None means "finest level reaches finest_resolution"
    """
    levels: int = 16
    table_size: int = 2 ** 13
    features: int = 2
    base_resolution: int = 16
    growth: Optional[float] = None
    finest_resolution: int = 2048

    def __post_init__(self):
        if self.levels < 1:
            raise ConfigError("levels must be >= 1, got {}".format(self.levels))
        if not _is_power_of_two(int(self.table_size)):
            raise ConfigError("table_size must be a power of two, got {}".format(self.table_size))
        if self.features < 1:
            raise ConfigError("features must be >= 1, got {}".format(self.features))
        if self.base_resolution < 1:
            raise ConfigError("base_resolution must be >= 1, got {}".format(self.base_resolution))
        if self.growth is None:
            if self.levels == 1:
                self.growth = 2.0
            else:
                self.growth = math.exp(math.log(self.finest_resolution / self.base_resolution) / (self.levels - 1))
        if not self.growth > 1.0:
            raise ConfigError("growth must be > 1, got {}".format(self.growth))

    @property
    def log2_table_size(self):
        return int(self.table_size).bit_length() - 1

    @property
    def output_width(self):
        return self.levels * self.features

    def level_resolution(self, level):
        # the epsilon keeps floor(16 * b**15) at 2048 despite rounding
        return int(math.floor(self.base_resolution * self.growth ** level + 1e-9))

    def table_length(self, level):
        n = self.level_resolution(level)
        return int(min(self.table_size, (n + 1) ** 3))

    def is_dense(self, level):
        return (self.level_resolution(level) + 1) ** 3 <= self.table_size

    def table_lengths(self):
        return [self.table_length(l) for l in range(self.levels)]

    def parameter_count(self):
        return sum(self.table_lengths()) * self.features


def hash_index(level_resolution, corner, table_len):
    """
    table slot of integer voxel corners
    :param level_resolution: N_l
    :param corner: int array (..., 3), components in [0, N_l]
    :param table_len: entries of this level's table
    :return: int64 array (...)
    """
    corner = np.asarray(corner, dtype=np.int64)
    shape = corner.shape[:-1]
    flat = corner.reshape(-1, 3)
    stride = int(level_resolution) + 1
    if stride ** 3 <= table_len:
        index = flat[:, 0] + flat[:, 1] * stride + flat[:, 2] * stride * stride
    else:
        # uint32 products wrap modulo 2**32
        mixed = flat.astype(np.uint32) * PRIMES[None, :]
        h = np.bitwise_xor.reduce(mixed, axis=1)
        index = (h % np.uint32(table_len)).astype(np.int64)
    return index.reshape(shape)


class HashGrid():
    def __init__(self, config, rng=None, dtype=np.float32, tables=None):
        """
        :param config: HashGridConfig
        :param rng: numpy Generator for the uniform [-1e-4, 1e-4] init
        :param dtype: storage dtype of the tables
        :param tables: optional list of ready arrays (checkpoint load)
        """
        self.config = config
        if tables is None:
            rng = np.random.default_rng() if rng is None else rng
            tables = [rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n, config.features)).astype(dtype)
                      for n in config.table_lengths()]
        self.tables = [np.asarray(t) for t in tables]
        for level, t in enumerate(self.tables):
            if t.shape != (config.table_length(level), config.features):
                raise ContractError("level {} table has shape {}, expected {}".format(
                    level, t.shape, (config.table_length(level), config.features)))

    @property
    def dtype(self):
        return self.tables[0].dtype

    def copy(self):
        return HashGrid(self.config, tables=[t.copy() for t in self.tables])


@dataclass
class MrheCache:
    indices: np.ndarray
    weights: np.ndarray
    table_lengths: List[int]
    features: int
    batch: int


@dataclass
class TableGradient:
    """
    sparse gradient of one level: rows `indices` of the table receive `values`
    """
    level: int
    indices: np.ndarray
    values: np.ndarray

    def to_dense(self, table_len):
        dense = np.zeros((table_len, self.values.shape[1]), dtype=self.values.dtype)
        dense[self.indices] = self.values
        return dense


def compute_dtype(storage_dtype):
    """
    float64 storage computes in float64, everything narrower in float32
    """
    return np.float64 if np.dtype(storage_dtype) == np.float64 else np.float32


def trilinear_corners(x, resolution):
    """
    :return: corner coordinates (n, 8, 3) and weights (n, 8); weights sum to 1 per sample
    """
    scaled = x * resolution
    base = np.clip(np.floor(scaled), 0, resolution - 1).astype(np.int64)
    frac = scaled - base
    corners = base[:, None, :] + CORNER_OFFSETS[None, :, :]
    w = np.where(CORNER_OFFSETS[None, :, :] == 1, frac[:, None, :], 1.0 - frac[:, None, :])
    return corners, w.prod(axis=2)


def mrhe_forward(grid, x_batch):
    """
    encode positions
    :param grid: HashGrid
    :param x_batch: (n, 3) positions in [0,1]^3
    :return: features (n, L*F) in compute precision, MrheCache
    """
    cfg = grid.config
    x = np.asarray(x_batch, dtype=np.float64).reshape(-1, 3)
    n = x.shape[0]
    dtype = compute_dtype(grid.dtype)
    features = np.empty((n, cfg.output_width), dtype=dtype)
    indices = np.empty((cfg.levels, n, 8), dtype=np.int64)
    weights = np.empty((cfg.levels, n, 8), dtype=dtype)
    for level in range(cfg.levels):
        res = cfg.level_resolution(level)
        corners, w = trilinear_corners(x, res)
        idx = hash_index(res, corners, len(grid.tables[level]))
        table = grid.tables[level].astype(dtype, copy=False)
        w = w.astype(dtype)
        features[:, level * cfg.features:(level + 1) * cfg.features] = np.einsum("nk,nkf->nf", w, table[idx])
        indices[level] = idx
        weights[level] = w
    cache = MrheCache(indices=indices, weights=weights, table_lengths=[len(t) for t in grid.tables],
                      features=cfg.features, batch=n)
    return features, cache


def mrhe_backward(cache, d_features):
    """
    scatter feature gradients onto table rows; colliding corners add up
    :param cache: MrheCache of the matching forward call
    :param d_features: (n, L*F)
    :return: list of TableGradient, one per level, all-zero rows dropped
    """
    if cache is None:
        raise ContractError("mrhe_backward needs the cache of a forward call")
    d = np.asarray(d_features)
    levels = len(cache.table_lengths)
    f = cache.features
    if d.shape != (cache.batch, levels * f):
        raise ContractError("d_features has shape {}, expected {}".format(d.shape, (cache.batch, levels * f)))
    result = []
    for level in range(levels):
        d_level = d[:, level * f:(level + 1) * f]
        contrib = (cache.weights[level][:, :, None] * d_level[:, None, :]).reshape(-1, f)
        uniq, inverse = np.unique(cache.indices[level].ravel(), return_inverse=True)
        values = np.stack([np.bincount(inverse, weights=contrib[:, j], minlength=len(uniq)) for j in range(f)],
                          axis=1) if len(uniq) else np.zeros((0, f))
        keep = np.any(values != 0, axis=1)
        result.append(TableGradient(level=level, indices=uniq[keep], values=values[keep]))
    return result
