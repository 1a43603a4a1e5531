# coding=utf-8
"""
Purpose:   [1] render a split (or some of its frames) and score every frame with PSNR / SSIM

Usage:     This code depends on the numpy tqdm
           This code is compatible with python 3.8.x.

Examples:  result = evaluate_split(model, occ_grid, scene, split="test", max_frames=5)
           print(result.mean_psnr, result.mean_ssim)

"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from tqdm import tqdm

from pytdnerf.errors import ContractError
from pytdnerf.pyproduct.quality import psnr, ssim
from pytdnerf.pyrender.render import render_image

logger = logging.getLogger(__name__)


@dataclass
class EvalResult:
    rows: List[dict]
    images: Dict[int, np.ndarray] = field(default_factory=dict)

    def _mean(self, key):
        return float(np.mean([r[key] for r in self.rows])) if self.rows else float("nan")

    @property
    def mean_psnr(self):
        return self._mean("psnr")

    @property
    def mean_ssim(self):
        return self._mean("ssim")

    @property
    def mean_samples_per_pixel(self):
        return self._mean("samples_per_pixel")

    def summary(self):
        return {"frames": len(self.rows), "psnr": self.mean_psnr, "ssim": self.mean_ssim,
                "samples_per_pixel": self.mean_samples_per_pixel}


def pick_frames(scene, split="test", frame_ids=None, max_frames=None):
    """
    frames to score: explicit ids, else the split, evenly thinned to max_frames
    """
    ids = list(frame_ids) if frame_ids is not None else scene.frame_ids(split)
    if not ids:
        raise ContractError("no frames to evaluate in split {!r}".format(split))
    if max_frames is not None and 0 < max_frames < len(ids):
        picks = np.linspace(0, len(ids) - 1, int(max_frames)).round().astype(int)
        ids = [ids[i] for i in picks]
    return ids


def evaluate_split(model, grid, scene, split="test", frame_ids=None, max_frames=None, background=None,
                   keep_images=False, verbose=False):
    """
    :param model: FieldModel
    :param grid: OccupancyGrid
    :param scene: Scene
    :param background: defaults to scene.background
    :param keep_images: keep renders in EvalResult.images keyed by frame id
    :return: EvalResult, one row per frame (frame, psnr, ssim, samples_per_pixel, tiles, elapsed_ms)
    """
    bg = scene.background if background is None else background
    ids = pick_frames(scene, split, frame_ids, max_frames)
    result = EvalResult(rows=[])
    for frame in tqdm(ids, desc="eval {}".format(split), disable=not verbose, leave=False):
        image, stats = render_image(model, grid, scene.cameras[frame], background=bg, bounds=scene.bounds)
        target = scene.images[frame]
        result.rows.append({"frame": int(frame), "psnr": psnr(image, target), "ssim": ssim(image, target),
                            "samples_per_pixel": stats.mean_samples_per_pixel, "tiles": stats.tiles,
                            "elapsed_ms": stats.elapsed_ms})
        if keep_images:
            result.images[int(frame)] = image
    logger.info("eval %s on %d frames: psnr %.2f dB, ssim %.3f, %.1f samples/pixel", split, len(ids),
                result.mean_psnr, result.mean_ssim, result.mean_samples_per_pixel)
    return result
