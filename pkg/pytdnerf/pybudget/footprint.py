# coding=utf-8
"""
Purpose:   [1] analytic memory footprint of one training configuration, itemized
               (hash tables, MLPs, optimizer state, gradients, occupancy grid, activations, images)
           [2] analytic operation count of one training step (2 ops per multiply-accumulate)
           [3] the reference baseline and selected configurations with their published totals

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  report = memory_footprint(HashGridConfig(), default_mlp_dims(HashGridConfig()), 8192, SceneSpec())
           print(report.total, report.gops_per_step)

"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List

import numpy as np

from pytdnerf.errors import ConfigError
from pytdnerf.pyencode.hashgrid import HashGridConfig
from pytdnerf.pyencode.sh import SH_WIDTH
from pytdnerf.pyfield import precision
from pytdnerf.pyfield.field import DENSITY_OUT, GEO_FEATURES, HIDDEN
from pytdnerf.pyrender.occupancy import RESOLUTION

logger = logging.getLogger(__name__)

ACT_BYTES = 2
GRID_BYTES = 2
ITEMS = ("hash", "mlp", "opt", "grad", "grid", "act", "img")
# per-sample compositing terms: alpha, transmittance, weight, dt
COMPOSITE_TERMS = 4
MB = 1e6


@dataclass
class SceneSpec:
    frames: int = 100
    width: int = 160
    height: int = 160
    channels: int = 3

    def __post_init__(self):
        if min(self.frames, self.width, self.height) < 1 or self.channels not in (1, 3):
            raise ConfigError("bad scene spec {}".format(self))

    @property
    def pixels(self):
        return self.width * self.height


def default_mlp_dims(grid_config, channels=3, hidden=HIDDEN):
    """
    :return: (density dims, color dims), e.g. [32, 64, 16], [31, 64, 64, 3]
    """
    return [grid_config.output_width, hidden, DENSITY_OUT], [GEO_FEATURES + SH_WIDTH, hidden, hidden, channels]


def mlp_parameter_count(dims):
    return sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))


def mlp_macs(dims):
    return sum(a * b for a, b in zip(dims[:-1], dims[1:]))


def activation_elements(grid_config, mlp_dims, channels):
    """
    cached values per sample on the backward path: interpolation weights and encoding,
    every layer input and pre-activation of both MLPs, raw/clamped density, color, compositing terms
    """
    density_dims, color_dims = mlp_dims
    encoding = grid_config.levels * 8 + grid_config.output_width
    density = sum(density_dims[:-1]) + sum(density_dims[1:])
    color = sum(color_dims[:-1]) + sum(color_dims[1:])
    return encoding + density + color + 2 + channels + COMPOSITE_TERMS


@dataclass
class BudgetReport:
    """
    items are bytes, total is their sum; ops_per_step counts operations (2 per MAC)
    """
    name: str
    items: OrderedDict
    ops_per_step: int
    batch: int
    log2_table_size: int
    dataset_bytes: int = 0
    img_bytes_byte_per_pixel: int = 0
    annotations: dict = field(default_factory=dict)

    @property
    def total(self):
        return int(sum(self.items.values()))

    @property
    def gops_per_step(self):
        return self.ops_per_step / 1e9

    def as_row(self):
        row = OrderedDict([("name", self.name), ("B", self.batch), ("T_log2", self.log2_table_size),
                           ("mem_bytes_total", self.total)])
        for k in ITEMS:
            row["mem_bytes_{}".format(k)] = int(self.items[k])
        row["gops_per_step"] = self.gops_per_step
        row["dataset_bytes"] = self.dataset_bytes
        row["img_bytes_byte_per_pixel"] = self.img_bytes_byte_per_pixel
        return row

    def lines(self):
        out = ["{}: B={} T=2^{}".format(self.name, self.batch, self.log2_table_size)]
        for k in ITEMS:
            out.append("  {:<5s} {:>14,d} B  {:>10.3f} MB".format(k, int(self.items[k]), self.items[k] / MB))
        out.append("  {:<5s} {:>14,d} B  {:>10.3f} MB".format("total", self.total, self.total / MB))
        out.append("  ops   {:.3f} GOps/step".format(self.gops_per_step))
        out.append("  images all frames {:.3f} MB, working set at 1 byte/pixel {:.3f} MB".format(
            self.dataset_bytes / MB, self.img_bytes_byte_per_pixel / MB))
        for k, v in self.annotations.items():
            out.append("  published {}: {}".format(k, v))
        return out


def ops_per_step(grid_config, mlp_dims, batch, channels=3):
    """
    per sample: MLP forward sum(in * out) MACs, backward twice that; L * 8 * F interpolation MACs
    each way; compositing linear terms; everything times B, reported as 2 ops per MAC
    """
    if batch < 1:
        raise ConfigError("batch must be >= 1, got {}".format(batch))
    density_dims, color_dims = mlp_dims
    forward = mlp_macs(density_dims) + mlp_macs(color_dims)
    interp = grid_config.levels * 8 * grid_config.features
    composite = 3 * (channels + COMPOSITE_TERMS - 1)
    per_sample = 3 * forward + 2 * interp + composite
    return int(2 * per_sample * int(batch))


def memory_footprint(grid_config, mlp_dims, batch, scene_spec, precision_mode=precision.MIXED16, img_per_step=1,
                     occ_resolution=RESOLUTION, name="config"):
    """
    :param grid_config: HashGridConfig
    :param mlp_dims: (density dims, color dims)
    :param batch: samples per optimizer step B
    :param scene_spec: SceneSpec
    :param precision_mode: storage precision of parameters; masters/moments/gradients at master precision
    :param img_per_step: images resident per step
    :return: BudgetReport
    """
    if img_per_step < 1:
        raise ConfigError("img_per_step must be >= 1, got {}".format(img_per_step))
    store = np.dtype(precision.storage_dtype(precision_mode)).itemsize
    master = np.dtype(precision.master_dtype(precision_mode)).itemsize
    hash_params = grid_config.parameter_count()
    mlp_params = sum(mlp_parameter_count(d) for d in mlp_dims)
    params = hash_params + mlp_params
    resident = min(int(img_per_step), scene_spec.frames)
    items = OrderedDict()
    items["hash"] = hash_params * store
    items["mlp"] = mlp_params * store
    # two moments and a master copy
    items["opt"] = 3 * params * master
    items["grad"] = params * master
    items["grid"] = int(occ_resolution) ** 3 * GRID_BYTES
    items["act"] = int(batch) * activation_elements(grid_config, mlp_dims, scene_spec.channels) * ACT_BYTES
    items["img"] = resident * scene_spec.pixels * scene_spec.channels
    report = BudgetReport(name=name, items=items,
                          ops_per_step=ops_per_step(grid_config, mlp_dims, batch, scene_spec.channels),
                          batch=int(batch), log2_table_size=grid_config.log2_table_size,
                          dataset_bytes=scene_spec.frames * scene_spec.pixels * scene_spec.channels,
                          img_bytes_byte_per_pixel=resident * scene_spec.pixels)
    logger.debug("%s: %d bytes, %.3f GOps/step", name, report.total, report.gops_per_step)
    return report


@dataclass
class BudgetSetting:
    name: str
    table_size: int
    batch: int
    img_per_step: int
    scene: SceneSpec
    published: dict = field(default_factory=dict)

    def grid_config(self):
        return HashGridConfig(table_size=self.table_size)

    def report(self, precision_mode=precision.MIXED16):
        gc = self.grid_config()
        result = memory_footprint(gc, default_mlp_dims(gc, self.scene.channels), self.batch, self.scene,
                                  precision_mode, self.img_per_step, name=self.name)
        result.annotations = dict(self.published)
        return result


BASELINE = BudgetSetting(name="baseline", table_size=2 ** 19, batch=2 ** 18, img_per_step=100,
                         scene=SceneSpec(frames=100, width=800, height=800),
                         published={"memory": "527 MB", "ops": "17.5 GOps/step"})
SELECTED = BudgetSetting(name="selected", table_size=2 ** 13, batch=8192, img_per_step=1,
                         scene=SceneSpec(frames=100, width=160, height=160),
                         published={"memory": "21.4 MB", "reduction": "96 %",
                                    "images": "0.03 MB at 1 img/step, 2.56 MB with 100 frames resident"})
REFERENCE_SETTINGS: List[BudgetSetting] = [BASELINE, SELECTED]


def reference_reports(precision_mode=precision.MIXED16):
    return [s.report(precision_mode) for s in REFERENCE_SETTINGS]


def reduction(baseline, selected):
    """
    fraction of the baseline total saved by the selected configuration
    """
    return 1.0 - selected.total / baseline.total
