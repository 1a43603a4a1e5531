# coding=utf-8
import numpy as np
import pytest

from pytdnerf.errors import ContractError
from pytdnerf.pyproduct.quality import PSNR_CAP, QualityCheck, gaussian_window, psnr, ssim


def sliding_ssim(x, y, window):
    size = window.shape[0]
    scores = []
    for i in range(x.shape[0] - size + 1):
        for j in range(x.shape[1] - size + 1):
            a = x[i:i + size, j:j + size]
            b = y[i:i + size, j:j + size]
            mu_a, mu_b = (window * a).sum(), (window * b).sum()
            var_a = (window * a * a).sum() - mu_a ** 2
            var_b = (window * b * b).sum() - mu_b ** 2
            cov = (window * a * b).sum() - mu_a * mu_b
            c1, c2 = 0.01 ** 2, 0.03 ** 2
            scores.append((2 * mu_a * mu_b + c1) * (2 * cov + c2) /
                          ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
    return float(np.mean(scores))


def test_psnr_values():
    assert psnr(np.zeros((4, 4)), np.full((4, 4), 0.5)) == pytest.approx(6.0206, abs=1e-4)
    assert psnr(np.zeros((4, 4, 3)), np.full((4, 4, 3), 0.1)) == pytest.approx(20.0)
    assert psnr(np.ones((4, 4)), np.ones((4, 4))) == PSNR_CAP


def test_psnr_is_symmetric():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(size=(8, 8, 3)), rng.uniform(size=(8, 8, 3))
    assert psnr(a, b) == psnr(b, a)


def test_ssim_of_identical_images():
    img = np.random.default_rng(1).uniform(size=(16, 16, 3))
    assert ssim(img, img) == 1.0


def test_ssim_of_inverted_checkerboard_is_negative():
    board = (np.add.outer(np.arange(16), np.arange(16)) % 2).astype(np.float64)
    assert ssim(board, 1.0 - board) < -0.5


def test_ssim_matches_a_sliding_window():
    rng = np.random.default_rng(2)
    x = rng.uniform(size=(14, 15))
    y = np.clip(x + rng.normal(scale=0.1, size=x.shape), 0, 1)
    assert ssim(x, y) == pytest.approx(sliding_ssim(x, y, gaussian_window()), abs=1e-4)


def test_ssim_averages_channels():
    rng = np.random.default_rng(3)
    x = rng.uniform(size=(12, 12, 3))
    y = rng.uniform(size=(12, 12, 3))
    per = [ssim(x[..., c], y[..., c]) for c in range(3)]
    assert ssim(x, y) == pytest.approx(np.mean(per))


def test_errors():
    with pytest.raises(ContractError):
        ssim(np.zeros((8, 8)), np.ones((8, 8)))
    with pytest.raises(ContractError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_quality_check_floors():
    img = np.random.default_rng(4).uniform(size=(12, 12, 3))
    scores = QualityCheck().check(img, img)
    assert scores == {"psnr": PSNR_CAP, "ssim": 1.0}
    assert QualityCheck(psnr_min=30.0, ssim_min=0.9).is_ok(scores)
    assert not QualityCheck(psnr_min=30.0).is_ok({"psnr": 20.0, "ssim": 1.0})
