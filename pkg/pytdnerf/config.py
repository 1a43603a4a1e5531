# coding=utf-8
"""
Purpose:   [1] one flat registry of every run parameter with its default and type
           [2] key=value config files (# comments, blank lines ignored), flags over file over defaults
           [3] typed dataclasses (HashGridConfig, TrainConfig, FederationConfig) built from the merged values
           [4] the effective configuration echoed to <out>/config.txt in the same key=value format

Usage:     This code depends on None
           This code is compatible with python 3.8.x.

Examples:  cfg = RunConfig.from_sources("lego.txt", {"steps": "2000"})
           train(scene, cfg.train_config(), out_dir=cfg["out"])
           cfg.echo(cfg["out"])

"""

import logging
import os
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Callable, Optional, Tuple

from pytdnerf.errors import ConfigError
from pytdnerf.pydata.partition import normalize_mode
from pytdnerf.pydata.scene import default_background
from pytdnerf.pyencode.hashgrid import HashGridConfig
from pytdnerf.pyfed.federation import FederationConfig, normalize_payload_mode
from pytdnerf.pyfield import precision
from pytdnerf.pyrender.render import TILE
from pytdnerf.pytrain.trainer import TrainConfig

logger = logging.getLogger(__name__)

OUT_ENV = "TDN_OUT"
CONFIG_ECHO = "config.txt"
BACKGROUNDS = ("auto", "white", "black")
NONE_WORDS = ("", "none", "null")


def parse_bool(text):
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ConfigError("not a boolean: {!r}".format(text))


def optional(cast):
    def parse(text):
        if text is None or str(text).strip().lower() in NONE_WORDS:
            return None
        return cast(text)
    return parse


def choice(options, normalize=None):
    def parse(text):
        key = normalize(text) if normalize else str(text).strip().lower().replace("-", "_")
        if key not in options:
            raise ConfigError("{!r} is not one of {}".format(text, options))
        return key
    return parse


def int_list(text):
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


def _float_int(text):
    # accepts 8192, 8e3, 8_192
    value = float(str(text).replace("_", ""))
    if value != int(value):
        raise ConfigError("not an integer: {!r}".format(text))
    return int(value)


@dataclass(frozen=True)
class Key:
    default: Any
    parse: Callable
    help: str = ""


def _registry():
    k = OrderedDict()
    # run
    k["scene"] = Key(None, optional(str), "NeRF-synthetic scene directory")
    k["out"] = Key("runs", str, "output directory (env {})".format(OUT_ENV))
    k["seed"] = Key(42, _float_int, "seed of every random draw")
    k["threads"] = Key(1, _float_int, "worker processes, 1 sequential, 0 physical cores")
    k["resolution"] = Key(160, _float_int, "square image size after box downscaling")
    k["channels"] = Key(3, _float_int, "3 rgb, 1 grayscale")
    k["background"] = Key("auto", choice(BACKGROUNDS), "auto | white | black")
    k["precision"] = Key(precision.FULL32, choice(precision.PRECISION_MODES), "full64 | full32 | mixed16")
    k["checkpoint"] = Key(None, optional(str), ".tdnf file for render / eval / export")
    k["split"] = Key("test", choice(("train", "test")), "split for eval / render")
    k["frame"] = Key(None, optional(_float_int), "single frame to render")
    k["max_frames"] = Key(None, optional(_float_int), "evaluate at most this many frames")
    k["hdf5"] = Key(None, optional(str), "export target")
    # encoding
    k["levels"] = Key(16, _float_int, "hash levels L")
    k["table_size_log2"] = Key(13, _float_int, "log2 of the table size T")
    k["features"] = Key(2, _float_int, "features per entry F")
    k["base_resolution"] = Key(16, _float_int, "coarsest level resolution")
    k["finest_resolution"] = Key(2048, _float_int, "finest level resolution")
    # training
    k["steps"] = Key(10000, _float_int, "optimizer steps")
    k["batch"] = Key(8192, _float_int, "samples per optimizer step B")
    k["tile"] = Key(TILE, _float_int, "samples per forward tile")
    k["img_per_step"] = Key(1, _float_int, "frames pixels are drawn from per step")
    k["lr"] = Key(1e-2, float, "Adam learning rate")
    k["beta1"] = Key(0.9, float, "Adam beta1")
    k["beta2"] = Key(0.99, float, "Adam beta2")
    k["eps_adam"] = Key(1e-15, float, "Adam epsilon")
    k["weight_decay_mlp"] = Key(1e-6, float, "L2 decay of the MLP weights")
    k["huber_delta"] = Key(0.1, float, "Huber loss delta")
    k["grid_update_every"] = Key(256, _float_int, "steps between occupancy refreshes")
    k["max_samples"] = Key(1024, _float_int, "per-ray sample cap")
    k["occ_resolution"] = Key(128, _float_int, "occupancy cells per axis")
    k["occ_decay"] = Key(0.95, float, "occupancy EMA decay")
    k["occ_threshold"] = Key(0.01, float, "occupancy opacity threshold")
    k["eval_every"] = Key(1000, _float_int, "steps between test renders, 0 off")
    k["eval_frames"] = Key(5, _float_int, "frames scored per periodic eval")
    k["checkpoint_every"] = Key(1000, _float_int, "steps between checkpoints, 0 off")
    k["check_finite"] = Key(False, parse_bool, "raise on non-finite parameters")
    # federation
    k["clients"] = Key(4, _float_int, "number of clients")
    k["pretrain_steps"] = Key(10000, _float_int, "coordinator pre-training steps")
    k["local_steps"] = Key(1000, _float_int, "local steps per round")
    k["rounds"] = Key(20, _float_int, "communication rounds")
    k["payload"] = Key("params_only", choice(("with_grid", "params_only"), normalize_payload_mode),
                       "with_grid | params_only")
    k["partition"] = Key("iid", choice(("iid", "non_iid"), normalize_mode), "iid | non_iid")
    k["bandwidth"] = Key(15e6, float, "link rate, bits per second")
    k["baselines"] = Key(False, parse_bool, "also train single-client and centralized baselines")
    k["fed_eval_frames"] = Key(None, optional(_float_int), "test frames per round eval, none = all")
    # sweep / budget
    k["sweep_batches"] = Key((2048, 4096, 8192, 16384), int_list, "comma list of B")
    k["sweep_tables"] = Key((10, 11, 12, 13, 14, 15), int_list, "comma list of log2 T")
    k["sweep_steps"] = Key(2000, _float_int, "training steps per sweep run")
    k["sweep_runs"] = Key(1, _float_int, "seeds per sweep row, best kept")
    k["sweep_resolution"] = Key(None, optional(_float_int), "image size of the sweep rows")
    k["budget_precision"] = Key(precision.MIXED16, choice(precision.PRECISION_MODES), "parameter storage in budgets")
    return k


KEYS = _registry()


def normalize_key(name):
    key = str(name).strip().lstrip("-").replace("-", "_")
    if key not in KEYS:
        raise ConfigError("unknown configuration key {!r}".format(name))
    return key


def format_value(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    return str(value)


class RunConfig():
    def __init__(self, values=None):
        """
        :param values: key -> raw text or typed value, parsed and validated on the way in
        """
        self.values = OrderedDict((k, v.default) for k, v in KEYS.items())
        self.values["out"] = os.environ.get(OUT_ENV, self.values["out"])
        self.explicit = set()
        for key, value in (values or {}).items():
            self.set(key, value)

    def set(self, key, value):
        key = normalize_key(key)
        parse = KEYS[key].parse
        try:
            typed = parse(value) if isinstance(value, str) or value is None else parse(format_value(value))
        except ConfigError as e:
            raise ConfigError("{}: {}".format(key, e)) from e
        except (TypeError, ValueError) as e:
            raise ConfigError("{}: cannot parse {!r}".format(key, value)) from e
        self.values[key] = typed
        self.explicit.add(key)
        return typed

    def __getitem__(self, key):
        return self.values[normalize_key(key)]

    @staticmethod
    def parse_lines(lines, source="<text>"):
        result = OrderedDict()
        for number, line in enumerate(lines, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError("{}:{}: expected key=value, got {!r}".format(source, number, line))
            result[key.strip()] = value.strip()
        return result

    @classmethod
    def read_file(cls, path):
        if not os.path.isfile(path):
            raise ConfigError("config file not found: {}".format(path))
        with open(path, "r") as f:
            return cls.parse_lines(f, source=path)

    @classmethod
    def from_sources(cls, path=None, overrides=None):
        """
        defaults, then the file, then overrides
        """
        cfg = cls()
        if path:
            for key, value in cls.read_file(path).items():
                cfg.set(key, value)
        for key, value in (overrides or {}).items():
            cfg.set(key, value)
        return cfg

    def lines(self):
        return ["{}={}".format(k, format_value(v)) for k, v in self.values.items()]

    def echo(self, out_dir=None):
        """
        write the effective configuration to <out>/config.txt
        :return: path written
        """
        out_dir = self["out"] if out_dir is None else out_dir
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, CONFIG_ECHO)
        with open(path, "w") as f:
            f.write("# effective pytdnerf configuration\n")
            f.write("\n".join(self.lines()) + "\n")
        logger.info("configuration echoed to %s", path)
        return path

    # builders

    def grid_config(self):
        return HashGridConfig(levels=self["levels"], table_size=2 ** self["table_size_log2"],
                              features=self["features"], base_resolution=self["base_resolution"],
                              finest_resolution=self["finest_resolution"])

    def tiling(self) -> Tuple[int, int]:
        batch, tile = self["batch"], min(self["tile"], self["batch"])
        if tile < 1 or batch % tile != 0:
            raise ConfigError("batch {} is not a multiple of tile {}".format(batch, tile))
        return tile, batch // tile

    def scene_background(self):
        """
        constant the loader composites transparent pixels onto
        """
        mode = self["background"]
        if mode == "auto":
            return default_background(self["channels"])
        return 1.0 if mode == "white" else 0.0

    def train_config(self, verbose=True):
        tile, accumulation = self.tiling()
        return TrainConfig(steps=self["steps"], batch=self["batch"], tile=tile, accumulation=accumulation,
                           img_per_step=self["img_per_step"], lr=self["lr"], betas=(self["beta1"], self["beta2"]),
                           eps_adam=self["eps_adam"], weight_decay_mlp=self["weight_decay_mlp"],
                           huber_delta=self["huber_delta"], grid_update_every=self["grid_update_every"],
                           seed=self["seed"], max_samples=self["max_samples"],
                           background=None if self["background"] == "auto" else self.scene_background(),
                           occ_resolution=self["occ_resolution"], occ_decay=self["occ_decay"],
                           occ_threshold=self["occ_threshold"], eval_every=self["eval_every"],
                           eval_frames=self["eval_frames"], checkpoint_every=self["checkpoint_every"],
                           check_finite=self["check_finite"], verbose=verbose)

    def fed_config(self, verbose=True):
        return FederationConfig(n_clients=self["clients"], pretrain_steps=self["pretrain_steps"],
                                local_steps=self["local_steps"], rounds=self["rounds"],
                                payload_mode=self["payload"], partition_mode=self["partition"],
                                bandwidth=self["bandwidth"], seed=self["seed"], baselines=self["baselines"],
                                eval_frames=self["fed_eval_frames"], threads=self["threads"], verbose=verbose)

    def require(self, key) -> Optional[Any]:
        value = self[key]
        if value is None:
            raise ConfigError("--{} is required here".format(key))
        return value
