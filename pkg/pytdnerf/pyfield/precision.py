# coding=utf-8
"""
Purpose:   [1] storage / compute dtype policy of the three precision modes
           full64  : float64 storage and compute (reference for gradient checks)
           full32  : float32 storage and compute
           mixed16 : float16 storage, float32 compute, float32 optimizer masters

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

"""

import numpy as np

from pytdnerf.errors import ConfigError

FULL64 = "full64"
FULL32 = "full32"
MIXED16 = "mixed16"
PRECISION_MODES = (FULL64, FULL32, MIXED16)

_STORAGE = {FULL64: np.float64, FULL32: np.float32, MIXED16: np.float16}
_COMPUTE = {FULL64: np.float64, FULL32: np.float32, MIXED16: np.float32}
_MASTER = {FULL64: np.float64, FULL32: np.float32, MIXED16: np.float32}


def check_mode(mode):
    if mode not in PRECISION_MODES:
        raise ConfigError("unknown precision_mode {!r}, expected one of {}".format(mode, PRECISION_MODES))
    return mode


def storage_dtype(mode):
    return _STORAGE[check_mode(mode)]


def compute_dtype(mode):
    return _COMPUTE[check_mode(mode)]


def master_dtype(mode):
    return _MASTER[check_mode(mode)]


def mode_code(mode):
    """integer code stored in checkpoint metadata"""
    return PRECISION_MODES.index(check_mode(mode))


def mode_from_code(code):
    try:
        return PRECISION_MODES[int(code)]
    except (IndexError, ValueError):
        raise ConfigError("unknown precision code {}".format(code))


def quantize(array, mode):
    """round an array to the storage precision of a mode, saturating at the largest finite value"""
    dtype = storage_dtype(mode)
    array = np.asarray(array)
    if dtype == np.float16:
        limit = np.finfo(np.float16).max
        array = np.clip(array, -limit, limit)
    return array.astype(dtype)
