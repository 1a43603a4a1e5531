# coding=utf-8
import numpy as np
import pytest

from pytdnerf.errors import ContractError
from pytdnerf.pytrain.loss import huber_loss


def test_quadratic_and_linear_regions():
    loss, grad = huber_loss(np.array([[0.55]]), np.array([[0.5]]))
    assert loss == pytest.approx(0.00125)
    assert grad[0, 0] == pytest.approx(0.05)
    loss, grad = huber_loss(np.array([[0.2]]), np.array([[0.5]]))
    assert loss == pytest.approx(0.025)
    assert grad[0, 0] == pytest.approx(-0.1)


def test_mean_over_elements():
    pred = np.zeros((2, 3))
    target = np.full((2, 3), 0.05)
    loss, grad = huber_loss(pred, target)
    assert loss == pytest.approx(0.00125)
    assert np.allclose(grad, -0.05 / 6)


def test_tiles_add_up_to_the_batch():
    rng = np.random.default_rng(0)
    pred, target = rng.uniform(size=(10, 3)), rng.uniform(size=(10, 3))
    whole, whole_grad = huber_loss(pred, target)
    a, ga = huber_loss(pred[:4], target[:4], normalizer=30)
    b, gb = huber_loss(pred[4:], target[4:], normalizer=30)
    assert a + b == pytest.approx(whole)
    assert np.allclose(np.concatenate([ga, gb]), whole_grad)


def test_empty_and_mismatch():
    loss, grad = huber_loss(np.zeros((0, 3)), np.zeros((0, 3)))
    assert loss == 0.0 and grad.shape == (0, 3)
    with pytest.raises(ContractError):
        huber_loss(np.zeros((2, 3)), np.zeros((3, 3)))
