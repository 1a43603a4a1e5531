# coding=utf-8
"""
Purpose:   [1] Adam with full-precision master weights and moments
           [2] coupled L2 decay on mlp.* tensors only; a step with a non-finite gradient is skipped
           [3] updated masters are written back to the model at its storage precision

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  state = AdamState(model)
           applied = adam_step(state, model, grads, AdamConfig())

"""

import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from pytdnerf.errors import ConfigError, ContractError
from pytdnerf.pyfield import precision

logger = logging.getLogger(__name__)

DECAY_PREFIX = "mlp."


@dataclass
class AdamConfig:
    lr: float = 1e-2
    betas: Tuple[float, float] = (0.9, 0.99)
    eps: float = 1e-15
    weight_decay: float = 1e-6

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError("lr must be > 0, got {}".format(self.lr))
        b1, b2 = self.betas
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise ConfigError("betas must lie in [0, 1), got {}".format(self.betas))
        if self.eps < 0 or self.weight_decay < 0:
            raise ConfigError("eps and weight_decay must be >= 0")


class AdamState():
    def __init__(self, model):
        """
        masters start as a copy of the model's tensors; moments at zero
        :param model: FieldModel
        """
        self.dtype = precision.master_dtype(model.precision_mode)
        self.masters = OrderedDict((k, v.astype(self.dtype)) for k, v in model.named_tensors().items())
        self.m = OrderedDict((k, np.zeros_like(v)) for k, v in self.masters.items())
        self.v = OrderedDict((k, np.zeros_like(v)) for k, v in self.masters.items())
        self.step = 0
        self.skipped = 0

    def reset_masters(self, model):
        """
        re-seed the masters from the model (after a broadcast overwrote its tensors); moments kept
        """
        for k, t in model.named_tensors().items():
            self.masters[k] = t.astype(self.dtype)

    def named_tensors(self):
        result = OrderedDict()
        for k in self.masters:
            result["adam.m.{}".format(k)] = self.m[k]
            result["adam.v.{}".format(k)] = self.v[k]
            result["adam.master.{}".format(k)] = self.masters[k]
        result["adam.step"] = np.array([self.step, self.skipped], dtype=np.float64)
        return result

    def load_named(self, tensors):
        for name, value in tensors.items():
            if name == "adam.step":
                self.step, self.skipped = int(value[0]), int(value[1]) if len(value) > 1 else 0
                continue
            _, slot, key = name.split(".", 2)
            target = {"m": self.m, "v": self.v, "master": self.masters}[slot]
            if key not in target:
                raise ContractError("unknown optimizer tensor {}".format(name))
            target[key] = np.asarray(value, dtype=self.dtype).reshape(target[key].shape)

    def copy(self):
        other = AdamState.__new__(AdamState)
        other.dtype = self.dtype
        other.masters = OrderedDict((k, v.copy()) for k, v in self.masters.items())
        other.m = OrderedDict((k, v.copy()) for k, v in self.m.items())
        other.v = OrderedDict((k, v.copy()) for k, v in self.v.items())
        other.step = self.step
        other.skipped = self.skipped
        return other

    def is_finite(self):
        return all(np.all(np.isfinite(d[k])) for d in (self.masters, self.m, self.v) for k in d)


def adam_step(state, model, grads, config):
    """
    one bias-corrected Adam update
    :param state: AdamState
    :param model: FieldModel, receives the re-quantized masters
    :param grads: name -> gradient summed over the effective batch
    :param config: AdamConfig
    :return: True when applied, False when skipped for a non-finite gradient
    """
    for name, g in grads.items():
        if name not in state.masters:
            raise ContractError("gradient for unknown tensor {}".format(name))
        if not np.all(np.isfinite(g)):
            state.skipped += 1
            logger.warning("skipping optimizer step %d: non-finite gradient in %s", state.step + 1, name)
            return False
    b1, b2 = config.betas
    state.step += 1
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, g in grads.items():
        p = state.masters[name]
        g = np.asarray(g, dtype=state.dtype)
        if config.weight_decay and name.startswith(DECAY_PREFIX):
            g = g + state.dtype(config.weight_decay) * p
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= (config.lr * (m / c1) / (np.sqrt(v / c2) + config.eps)).astype(state.dtype)
        model.set_tensor(name, p)
    return True
