# coding=utf-8
"""
Purpose:   [1] volume rendering of flattened, ray-ordered samples (float64, segmented sums)
           [2] exact reverse pass to per-sample sigma and color

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  result = composite(sigma, color, dt, ray_id, ray_count, background=1.0)
           d_sigma, d_c = composite_backward(result.cache, d_ray_color)

"""

from dataclasses import dataclass

import numpy as np

from pytdnerf.errors import ContractError

TRANSMITTANCE_EPS = 1e-4
# sigma * dt saturates here, alpha is exactly 1 beyond
TAU_MAX = 1e4


@dataclass
class CompositeCache:
    ray_id: np.ndarray
    ray_count: int
    dt: np.ndarray
    tau_live: np.ndarray
    transmittance: np.ndarray
    weights: np.ndarray
    color: np.ndarray
    background: np.ndarray


@dataclass
class RenderResult:
    color: np.ndarray
    opacity: np.ndarray
    weights: np.ndarray
    cache: CompositeCache


def _segment_start(ray_id, values_cumsum):
    """
    inclusive cumsum restarted at each ray: subtract the running total before the ray's first sample
    """
    first = np.searchsorted(ray_id, ray_id, side="left")
    before = np.concatenate([[0.0], values_cumsum])[first]
    return values_cumsum - before


def _per_ray(ray_id, values, ray_count):
    if values.ndim == 1:
        return np.bincount(ray_id, weights=values, minlength=ray_count)
    return np.stack([np.bincount(ray_id, weights=values[:, j], minlength=ray_count)
                     for j in range(values.shape[1])], axis=1)


def check_ordering(ray_id, t=None):
    """
    ray ids non-decreasing, and t strictly increasing inside a ray when given
    """
    if ray_id.size < 2:
        return
    step = np.diff(ray_id)
    if np.any(step < 0):
        raise ContractError("samples are not grouped by ray in increasing ray order")
    if t is not None:
        same = step == 0
        if np.any(np.diff(np.asarray(t, dtype=np.float64))[same] <= 0):
            raise ContractError("samples of a ray are not ordered by t")


def composite(sigma, color, dt, ray_id, ray_count, background=1.0, t=None):
    """
    alpha_i = 1 - exp(-sigma_i dt_i), T_i = prod_{j<i}(1 - alpha_j), w_i = T_i alpha_i,
    color = sum w_i c_i + (1 - sum w_i) * background; samples with T_i < 1e-4 get no weight
    :param sigma: (s,) >= 0
    :param color: (s, c)
    :param dt: (s,) > 0
    :param ray_id: (s,) owner ray, non-decreasing
    :param ray_count: rays in the batch (rays without samples get the background)
    :param background: scalar or (c,)
    :param t: optional (s,) sample depths, checked for order
    :return: RenderResult
    """
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
    ray_id = np.asarray(ray_id, dtype=np.int64).reshape(-1)
    dt = np.broadcast_to(np.asarray(dt, dtype=np.float64), sigma.shape)
    color = np.asarray(color, dtype=np.float64)
    if color.ndim != 2:
        color = color.reshape(-1, 1)
    if not (sigma.shape[0] == ray_id.shape[0] == color.shape[0]):
        raise ContractError("sigma, color and ray_id disagree on the sample count")
    check_ordering(ray_id, t)
    channels = color.shape[1] if sigma.size else max(color.shape[1], np.size(background))
    color = color.reshape(sigma.shape[0], channels)
    bg = np.broadcast_to(np.asarray(background, dtype=np.float64), (channels,)).copy()

    tau = np.minimum(sigma * dt, TAU_MAX)
    exclusive = _segment_start(ray_id, np.cumsum(tau)) - tau
    trans = np.exp(-exclusive)
    live = trans >= TRANSMITTANCE_EPS
    alpha = -np.expm1(-tau)
    weights = np.where(live, trans * alpha, 0.0)

    opacity = _per_ray(ray_id, weights, ray_count)
    ray_color = _per_ray(ray_id, weights[:, None] * color, ray_count).reshape(ray_count, channels)
    ray_color = ray_color + (1.0 - opacity)[:, None] * bg[None, :]
    # tau of saturated or dead samples carries no gradient
    tau_live = live & (sigma * dt < TAU_MAX)
    cache = CompositeCache(ray_id=ray_id, ray_count=int(ray_count), dt=dt, tau_live=tau_live,
                           transmittance=trans, weights=weights, color=color, background=bg)
    return RenderResult(color=ray_color, opacity=opacity, weights=weights, cache=cache)


def composite_backward(cache, d_color):
    """
    :param cache: CompositeCache of the matching composite call
    :param d_color: (ray_count, c) gradient of the loss w.r.t. the ray colors
    :return: d_sigma (s,), d_c (s, c)
    """
    if cache is None:
        raise ContractError("composite_backward needs the cache of a composite call")
    g = np.asarray(d_color, dtype=np.float64)
    expected = (cache.ray_count, cache.background.shape[0])
    if g.size != expected[0] * expected[1]:
        raise ContractError("d_color has shape {}, expected {}".format(g.shape, expected))
    g = g.reshape(expected)
    if cache.ray_id.size == 0:
        return np.zeros(0), np.zeros((0, g.shape[1]))
    g_s = g[cache.ray_id]
    d_c = cache.weights[:, None] * g_s
    q = ((cache.color - cache.background[None, :]) * g_s).sum(axis=1)
    wq = cache.weights * q
    # later samples of the same ray: ray total minus inclusive prefix
    total = np.bincount(cache.ray_id, weights=wq, minlength=cache.ray_count)[cache.ray_id]
    suffix = total - _segment_start(cache.ray_id, np.cumsum(wq))
    trans_next = cache.transmittance - cache.weights
    d_tau = trans_next * q - suffix
    d_sigma = np.where(cache.tau_live, d_tau * cache.dt, 0.0)
    return d_sigma, d_c
