# coding=utf-8
"""
Purpose:   [1] draw random training pixels of random frames ("img/step" knob)

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  batch = sample_training_pixels(scene, rng, n_rays=512, img_per_step=1, frame_ids=plan.client_frames(0))

"""

from dataclasses import dataclass

import numpy as np

from pytdnerf.errors import ContractError


@dataclass
class PixelSamples:
    """
    n pixel draws, arrays aligned on the first axis
    """
    frame_ids: np.ndarray
    us: np.ndarray
    vs: np.ndarray
    targets: np.ndarray

    def __len__(self):
        return len(self.frame_ids)

    def as_list(self):
        """
        list of (frame id, u, v, target color)
        """
        return [(int(f), int(u), int(v), t) for f, u, v, t in zip(self.frame_ids, self.us, self.vs, self.targets)]


def sample_training_pixels(scene, rng, n_rays, img_per_step=1, frame_ids=None):
    """
    pick img_per_step frames, then n_rays pixels uniformly with replacement across them
    :param scene: Scene
    :param rng: numpy Generator
    :param n_rays: int >= 0
    :param img_per_step: int >= 1, frames drawn without replacement when enough exist
    :param frame_ids: frames the caller owns, defaults to the whole train split
    :return: PixelSamples
    """
    if img_per_step < 1:
        raise ContractError("img_per_step must be >= 1, got {}".format(img_per_step))
    pool = np.asarray(scene.train_ids if frame_ids is None else list(frame_ids), dtype=np.int64)
    if pool.size == 0:
        raise ContractError("no frames to sample pixels from")
    if n_rays < 0:
        raise ContractError("n_rays must be >= 0, got {}".format(n_rays))
    chosen = rng.choice(pool, size=int(img_per_step), replace=bool(img_per_step > pool.size))
    which = rng.integers(0, len(chosen), size=int(n_rays))
    frames = chosen[which]
    us = np.empty(n_rays, dtype=np.int64)
    vs = np.empty(n_rays, dtype=np.int64)
    targets = np.empty((n_rays, scene.channels), dtype=np.float64)
    for k, frame in enumerate(chosen):
        idx = np.nonzero(which == k)[0]
        if idx.size == 0:
            continue
        cam = scene.cameras[frame]
        us[idx] = rng.integers(0, cam.width, size=idx.size)
        vs[idx] = rng.integers(0, cam.height, size=idx.size)
        targets[idx] = scene.images[frame][vs[idx], us[idx]]
    return PixelSamples(frame_ids=frames, us=us, vs=vs, targets=targets)
