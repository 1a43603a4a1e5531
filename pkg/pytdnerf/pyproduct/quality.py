# coding=utf-8
"""
Purpose:   [1] check render quality against ground truth: PSNR (peak 1.0, capped) and SSIM
           [2] SSIM uses an 11x11 gaussian window (sigma 1.5), valid-mode, per channel then averaged

Usage:     This code depends on the numpy scipy
           This code is compatible with python 3.8.x.

Examples:  QualityCheck().check(render, target)  ->  {"psnr": 27.1, "ssim": 0.91}

"""

import numpy as np
from scipy.signal import convolve2d

from pytdnerf.errors import ContractError

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError("image shapes differ: {} vs {}".format(a.shape, b.shape))
    return a, b


def psnr(a, b):
    """
    -10 log10(mse), identical images give the 99 dB cap
    """
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse <= 10.0 ** (-PSNR_CAP / 10.0):
        return PSNR_CAP
    return float(-10.0 * np.log10(mse))


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_channel(x, y, window):
    mu_x = convolve2d(x, window, mode="valid")
    mu_y = convolve2d(y, window, mode="valid")
    var_x = convolve2d(x * x, window, mode="valid") - mu_x ** 2
    var_y = convolve2d(y * y, window, mode="valid") - mu_y ** 2
    cov = convolve2d(x * y, window, mode="valid") - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x ** 2 + mu_y ** 2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


def ssim(a, b):
    """
    :param a: (h, w) or (h, w, c) in [0,1]
    :param b: same shape
    :return: mean SSIM over valid window positions and channels
    """
    a, b = _pair(a, b)
    if a.ndim == 2:
        a, b = a[..., None], b[..., None]
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ContractError("ssim needs images of at least {0}x{0}, got {1}x{2}".format(
            SSIM_WINDOW, a.shape[1], a.shape[0]))
    if np.array_equal(a, b):
        return 1.0
    window = gaussian_window()
    scores = [_ssim_channel(a[..., c], b[..., c], window) for c in range(a.shape[2])]
    return float(np.clip(np.mean(scores), -1.0, 1.0))


class QualityCheck():
    """
    check render quality
    """

    def __init__(self, psnr_min=None, ssim_min=None):
        """
        :param psnr_min: optional acceptance floor in dB
        :param ssim_min: optional acceptance floor
        """
        self.psnr_min = psnr_min
        self.ssim_min = ssim_min

    def check(self, render, target):
        """
        :return: dict with psnr and ssim
        """
        return {"psnr": psnr(render, target), "ssim": ssim(render, target)}

    def is_ok(self, scores):
        """
        True when every configured floor is met
        """
        result = True
        if self.psnr_min is not None:
            result = result and scores["psnr"] >= self.psnr_min
        if self.ssim_min is not None:
            result = result and scores["ssim"] >= self.ssim_min
        return result
