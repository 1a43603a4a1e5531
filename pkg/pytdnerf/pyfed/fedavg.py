# coding=utf-8
"""
Purpose:   [1] FedAvg: weighted elementwise mean of named-tensor sets, computed in float64

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  merged = fedavg([client_a, client_b], [25, 25])

"""

from collections import OrderedDict

import numpy as np

from pytdnerf.errors import AggregationError


def normalize_weights(weights, count):
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != count:
        raise AggregationError("{} weights for {} parameter sets".format(w.shape[0], count))
    if np.any(w < 0) or not np.isfinite(w).all() or w.sum() <= 0:
        raise AggregationError("weights must be finite, non-negative and not all zero: {}".format(weights))
    return w / w.sum()


def fedavg(param_sets, weights=None):
    """
    x0 + sum_i w_i (x_i - x0) per tensor, x0 the first set; identical sets come back unchanged
    :param param_sets: list of name -> array, same names and shapes
    :param weights: per-set weights, normalized to sum 1 (equal weights when None)
    :return: OrderedDict name -> float64 array, in the first set's name order
    """
    if not param_sets:
        raise AggregationError("nothing to aggregate")
    weights = np.ones(len(param_sets)) if weights is None else weights
    w = normalize_weights(weights, len(param_sets))
    names = list(param_sets[0].keys())
    for k, other in enumerate(param_sets[1:], start=1):
        if set(other.keys()) != set(names):
            missing = sorted(set(names).symmetric_difference(other.keys()))
            raise AggregationError("set {} differs in tensor names: {}".format(k, missing))
    result = OrderedDict()
    for name in names:
        base = np.asarray(param_sets[0][name], dtype=np.float64)
        acc = np.zeros_like(base)
        for k, ps in enumerate(param_sets):
            x = np.asarray(ps[name], dtype=np.float64)
            if x.shape != base.shape:
                raise AggregationError("{}: set {} has shape {}, set 0 has {}".format(name, k, x.shape, base.shape))
            acc += w[k] * (x - base)
        result[name] = base + acc
    return result
