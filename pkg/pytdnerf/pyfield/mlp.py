# coding=utf-8
"""
Purpose:   [1] dense relu networks with hand-written forward and reverse passes

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  params = MlpParams.init([32, 64, 16], rng)
           out, cache = mlp_forward(params, x)
           d_x, grads = mlp_backward(params, cache, d_out)

"""

from dataclasses import dataclass
from typing import List

import numpy as np

from pytdnerf.errors import ContractError


@dataclass
class MlpParams:
    """
    weights[i] has shape (out_i, in_i); hidden layers use a rectifier, the last layer is affine
    """
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ContractError("an mlp needs one bias per weight and at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[0],):
                raise ContractError("layer {}: bias {} does not match weight {}".format(i, b.shape, w.shape))
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ContractError("layer {} takes {} inputs but layer {} gives {}".format(
                    i, w.shape[1], i - 1, self.weights[i - 1].shape[0]))

    @classmethod
    def init(cls, dims, rng, dtype=np.float32):
        """
        He-uniform weights, limit sqrt(6 / fan_in), zero biases
        :param dims: [in, hidden..., out]
        """
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)).astype(dtype))
            biases.append(np.zeros(fan_out, dtype=dtype))
        return cls(weights=weights, biases=biases)

    @property
    def dims(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_layers(self):
        return len(self.weights)

    def parameter_count(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def macs_per_sample(self):
        return sum(w.size for w in self.weights)

    def copy(self):
        return MlpParams(weights=[w.copy() for w in self.weights], biases=[b.copy() for b in self.biases])


@dataclass
class MlpCache:
    inputs: List[np.ndarray]
    pre: List[np.ndarray]


@dataclass
class MlpGrads:
    weights: List[np.ndarray]
    biases: List[np.ndarray]


def mlp_forward(params, x):
    """
    :param params: MlpParams
    :param x: (n, in)
    :return: (n, out), MlpCache; compute runs in float64 for float64 weights, float32 otherwise
    """
    dtype = np.float64 if params.weights[0].dtype == np.float64 else np.float32
    a = np.asarray(x, dtype=dtype)
    if a.ndim != 2 or a.shape[1] != params.weights[0].shape[1]:
        raise ContractError("mlp expects (n, {}) input, got {}".format(params.weights[0].shape[1], a.shape))
    inputs, pre = [], []
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T.astype(dtype, copy=False) + b.astype(dtype, copy=False)
        inputs.append(a)
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
    return a, MlpCache(inputs=inputs, pre=pre)


def mlp_backward(params, cache, d_output):
    """
    :param params: MlpParams used in the forward call
    :param cache: MlpCache
    :param d_output: (n, out)
    :return: d_input (n, in), MlpGrads in float64
    """
    if cache is None:
        raise ContractError("mlp_backward needs the cache of a forward call")
    d = np.asarray(d_output, dtype=cache.pre[-1].dtype)
    if d.shape != cache.pre[-1].shape:
        raise ContractError("d_output has shape {}, expected {}".format(d.shape, cache.pre[-1].shape))
    d_weights = [None] * params.n_layers
    d_biases = [None] * params.n_layers
    for i in range(params.n_layers - 1, -1, -1):
        d_weights[i] = (d.T @ cache.inputs[i]).astype(np.float64)
        d_biases[i] = d.sum(axis=0, dtype=np.float64)
        d = d @ params.weights[i].astype(d.dtype, copy=False)
        if i > 0:
            d = d * (cache.pre[i - 1] > 0)
    return d, MlpGrads(weights=d_weights, biases=d_biases)
