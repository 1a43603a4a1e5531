# coding=utf-8
"""
Purpose:   [1] the radiance field: hash encoding -> density mlp -> (sigma, h);
               (h, sh(d)) -> color mlp -> logistic color
           [2] reverse pass down to hash-table rows, full-precision gradient buffers
           [3] named-tensor view of every trainable array (checkpoint / fedavg / adam keys)

Usage:     This code depends on the numpy scipy
           This code is compatible with python 3.8.x.

Examples:  model = FieldModel(HashGridConfig(), channels=3, precision_mode="mixed16", seed=42)
           out = field_forward(model, positions, directions)
           grads = field_backward(model, out.cache, d_sigma, d_color)

"""

import logging
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from pytdnerf.errors import ContractError
from pytdnerf.pyencode.hashgrid import HashGrid, HashGridConfig, MrheCache, mrhe_backward, mrhe_forward
from pytdnerf.pyencode.sh import SH_WIDTH, sh_encode
from pytdnerf.pyfield import precision
from pytdnerf.pyfield.mlp import MlpCache, MlpParams, mlp_backward, mlp_forward

logger = logging.getLogger(__name__)

DENSITY_OUT = 16
GEO_FEATURES = DENSITY_OUT - 1
HIDDEN = 64
SIGMA_CLAMP = 15.0


class FieldModel():
    def __init__(self, grid_config=None, channels=3, precision_mode=precision.FULL32, seed=42, rng=None,
                 hidden=HIDDEN):
        """
        :param grid_config: HashGridConfig, defaults L=16 T=2^13 F=2
        :param channels: color outputs, 1 or 3
        :param precision_mode: full64 | full32 | mixed16
        :param seed: init seed when rng is not given
        """
        if channels not in (1, 3):
            raise ContractError("channels must be 1 or 3, got {}".format(channels))
        self.precision_mode = precision.check_mode(precision_mode)
        self.channels = int(channels)
        self.hidden = int(hidden)
        grid_config = HashGridConfig() if grid_config is None else grid_config
        rng = np.random.default_rng(seed) if rng is None else rng
        dtype = self.storage_dtype
        self.grid = HashGrid(grid_config, rng=rng, dtype=dtype)
        self.density_mlp = MlpParams.init([grid_config.output_width, self.hidden, DENSITY_OUT], rng, dtype)
        self.color_mlp = MlpParams.init([GEO_FEATURES + SH_WIDTH, self.hidden, self.hidden, self.channels],
                                        rng, dtype)

    @property
    def grid_config(self):
        return self.grid.config

    @property
    def storage_dtype(self):
        return precision.storage_dtype(self.precision_mode)

    def named_tensors(self):
        """
        ordered name -> array (live references)
        grid.level{l}, mlp.density.w{i}/b{i}, mlp.color.w{i}/b{i}
        """
        result = OrderedDict()
        for level, table in enumerate(self.grid.tables):
            result["grid.level{}".format(level)] = table
        for prefix, mlp in (("mlp.density", self.density_mlp), ("mlp.color", self.color_mlp)):
            for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
                result["{}.w{}".format(prefix, i)] = w
                result["{}.b{}".format(prefix, i)] = b
        return result

    def set_tensor(self, name, value):
        """
        overwrite one named tensor, rounded to storage precision
        """
        current = self.named_tensors()
        if name not in current:
            raise ContractError("unknown tensor {}".format(name))
        value = np.asarray(value)
        if value.shape != current[name].shape:
            raise ContractError("{} has shape {}, got {}".format(name, current[name].shape, value.shape))
        stored = precision.quantize(value, self.precision_mode)
        kind, rest = name.split(".", 1)
        if kind == "grid":
            self.grid.tables[int(rest[len("level"):])] = stored
            return
        which, slot = rest.split(".")
        mlp = self.density_mlp if which == "density" else self.color_mlp
        target = mlp.weights if slot[0] == "w" else mlp.biases
        target[int(slot[1:])] = stored

    def load_named(self, tensors):
        for name, value in tensors.items():
            self.set_tensor(name, value)

    def parameter_count(self):
        return sum(t.size for t in self.named_tensors().values())

    def copy(self):
        other = FieldModel.__new__(FieldModel)
        other.precision_mode = self.precision_mode
        other.channels = self.channels
        other.hidden = self.hidden
        other.grid = self.grid.copy()
        other.density_mlp = self.density_mlp.copy()
        other.color_mlp = self.color_mlp.copy()
        return other


@dataclass
class FieldCache:
    encoding: MrheCache
    density: MlpCache
    color: MlpCache
    raw_sigma: np.ndarray
    sigma: np.ndarray
    rgb: np.ndarray


@dataclass
class FieldOutput:
    sigma: np.ndarray
    color: np.ndarray
    cache: FieldCache


def _density_head(model, positions):
    feats, enc_cache = mrhe_forward(model.grid, positions)
    dout, dcache = mlp_forward(model.density_mlp, feats)
    raw = dout[:, 0]
    sigma = np.exp(np.clip(raw, -SIGMA_CLAMP, SIGMA_CLAMP))
    return sigma, dout, raw, enc_cache, dcache


def field_density(model, positions):
    """
    sigma only, no cache kept (occupancy sweeps)
    """
    sigma = _density_head(model, positions)[0]
    return sigma


def field_forward(model, positions, directions):
    """
    :param model: FieldModel
    :param positions: (n, 3) in [0,1]^3
    :param directions: (n, 3) unit vectors
    :return: FieldOutput, sigma (n,) >= 0, color (n, channels) in (0,1)
    """
    positions = np.asarray(positions).reshape(-1, 3)
    directions = np.asarray(directions).reshape(-1, 3)
    if positions.shape != directions.shape:
        raise ContractError("positions {} and directions {} differ".format(positions.shape, directions.shape))
    sigma, dout, raw, enc_cache, dcache = _density_head(model, positions)
    sh = sh_encode(directions).astype(dout.dtype, copy=False)
    color_in = np.concatenate([dout[:, 1:], sh], axis=1)
    logits, ccache = mlp_forward(model.color_mlp, color_in)
    color = expit(logits)
    cache = FieldCache(encoding=enc_cache, density=dcache, color=ccache, raw_sigma=raw, sigma=sigma, rgb=color)
    return FieldOutput(sigma=sigma, color=color, cache=cache)


def field_backward(model, cache, d_sigma, d_color):
    """
    reverse pass of field_forward; directions get no gradient
    :param model: FieldModel used in the forward call
    :param cache: FieldCache of that call (FieldOutput.cache)
    :param d_sigma: (n,)
    :param d_color: (n, channels)
    :return: OrderedDict name -> float64 gradient, same keys and shapes as model.named_tensors()
    """
    if cache is None:
        raise ContractError("field_backward needs the cache of a forward call")
    n = cache.raw_sigma.shape[0]
    d_sigma = np.asarray(d_sigma, dtype=np.float64).reshape(n)
    d_color = np.asarray(d_color, dtype=np.float64).reshape(n, model.channels)

    c = cache.rgb.astype(np.float64)
    d_logits = d_color * c * (1.0 - c)
    d_color_in, color_grads = mlp_backward(model.color_mlp, cache.color, d_logits)

    raw = cache.raw_sigma
    live = (raw > -SIGMA_CLAMP) & (raw < SIGMA_CLAMP)
    d_raw = np.where(live, d_sigma * cache.sigma, 0.0)
    d_density_out = np.concatenate([d_raw[:, None].astype(d_color_in.dtype), d_color_in[:, :GEO_FEATURES]], axis=1)
    d_feats, density_grads = mlp_backward(model.density_mlp, cache.density, d_density_out)
    table_grads = mrhe_backward(cache.encoding, d_feats)

    result = OrderedDict()
    for tg in table_grads:
        result["grid.level{}".format(tg.level)] = tg.to_dense(cache.encoding.table_lengths[tg.level]).astype(np.float64)
    for prefix, grads in (("mlp.density", density_grads), ("mlp.color", color_grads)):
        for i, (w, b) in enumerate(zip(grads.weights, grads.biases)):
            result["{}.w{}".format(prefix, i)] = w
            result["{}.b{}".format(prefix, i)] = b
    return result
