# coding=utf-8
"""
Purpose:   [1] write renders as 8-bit png

Usage:     This code depends on the numpy pillow
           This code is compatible with python 3.8.x.

"""

import os

import numpy as np
from PIL import Image


def to_uint8(image):
    return (np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_png(image, path):
    """
    :param image: (h, w, 3) or (h, w, 1) / (h, w) in [0,1]
    :return: path
    """
    pixels = to_uint8(image)
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        pixels = pixels[..., 0]
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    Image.fromarray(pixels).save(path)
    return path
