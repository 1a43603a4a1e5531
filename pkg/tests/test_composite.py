# coding=utf-8
import numpy as np
import pytest

from pytdnerf.errors import ContractError
from pytdnerf.pyrender.composite import composite, composite_backward


def test_two_samples_closed_form():
    sigma = np.array([2.0, 3.0])
    dt = np.array([0.1, 0.2])
    color = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    result = composite(sigma, color, dt, [0, 0], 1, background=0.5)
    a1 = 1 - np.exp(-0.2)
    a2 = 1 - np.exp(-0.6)
    w1, w2 = a1, np.exp(-0.2) * a2
    expected = w1 * color[0] + w2 * color[1] + (1 - w1 - w2) * 0.5
    assert np.allclose(result.color[0], expected)
    assert np.allclose(result.weights, [w1, w2])
    assert result.opacity[0] == pytest.approx(w1 + w2)


def test_weights_sum_to_opacity_and_stay_below_one():
    rng = np.random.default_rng(0)
    ray_id = np.sort(rng.integers(0, 5, size=60))
    result = composite(rng.uniform(0, 50, size=60), rng.uniform(size=(60, 3)), 0.01, ray_id, 5)
    assert np.allclose(np.bincount(ray_id, weights=result.weights, minlength=5), result.opacity)
    assert (result.opacity <= 1.0 + 1e-12).all()


def test_rays_do_not_leak_into_each_other():
    rng = np.random.default_rng(1)
    sigma = rng.uniform(0, 30, size=20)
    color = rng.uniform(size=(20, 3))
    ray_id = np.repeat([0, 1], 10)
    joint = composite(sigma, color, 0.02, ray_id, 2)
    first = composite(sigma[:10], color[:10], 0.02, np.zeros(10, dtype=int), 1)
    second = composite(sigma[10:], color[10:], 0.02, np.zeros(10, dtype=int), 1)
    assert np.allclose(joint.color, np.concatenate([first.color, second.color]))


def test_empty_ray_gets_the_background():
    result = composite(np.array([1.0]), np.array([[0.2, 0.2, 0.2]]), 0.1, [1], 3, background=[0.1, 0.2, 0.3])
    assert np.allclose(result.color[0], [0.1, 0.2, 0.3])
    assert np.allclose(result.color[2], [0.1, 0.2, 0.3])
    assert result.opacity[0] == 0.0


def test_saturated_ray_stops_accumulating():
    sigma = np.array([1e5, 1.0, 1.0])
    result = composite(sigma, np.ones((3, 1)), 1.0, [0, 0, 0], 1, background=0.0)
    assert result.weights[0] == pytest.approx(1.0)
    assert result.weights[1:].tolist() == [0.0, 0.0]


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(2)
    ray_id = np.array([0, 0, 0, 1, 1, 2, 2, 2, 2])
    sigma = rng.uniform(0.5, 20, size=9)
    color = rng.uniform(size=(9, 3))
    dt = rng.uniform(0.01, 0.05, size=9)
    g = rng.normal(size=(4, 3))

    def loss(s, c):
        return float((composite(s, c, dt, ray_id, 4, background=0.7).color * g).sum())

    result = composite(sigma, color, dt, ray_id, 4, background=0.7)
    d_sigma, d_c = composite_backward(result.cache, g)
    eps = 1e-6
    for i in range(9):
        up, down = sigma.copy(), sigma.copy()
        up[i] += eps
        down[i] -= eps
        assert d_sigma[i] == pytest.approx((loss(up, color) - loss(down, color)) / (2 * eps), rel=1e-5, abs=1e-9)
        for j in range(3):
            up, down = color.copy(), color.copy()
            up[i, j] += eps
            down[i, j] -= eps
            numeric = (loss(sigma, up) - loss(sigma, down)) / (2 * eps)
            assert d_c[i, j] == pytest.approx(numeric, rel=1e-5, abs=1e-9)


def test_backward_without_samples():
    result = composite(np.zeros(0), np.zeros((0, 3)), 0.1, np.zeros(0, dtype=int), 2)
    d_sigma, d_c = composite_backward(result.cache, np.ones((2, 3)))
    assert d_sigma.shape == (0,) and d_c.shape == (0, 3)


def test_ordering_is_checked():
    with pytest.raises(ContractError):
        composite(np.ones(3), np.ones((3, 3)), 0.1, [1, 0, 0], 2)
    with pytest.raises(ContractError):
        composite(np.ones(2), np.ones((2, 3)), 0.1, [0, 0], 1, t=[0.5, 0.4])


def test_shape_errors():
    with pytest.raises(ContractError):
        composite(np.ones(2), np.ones((3, 3)), 0.1, [0, 0], 1)
    result = composite(np.ones(2), np.ones((2, 3)), 0.1, [0, 0], 1)
    with pytest.raises(ContractError):
        composite_backward(result.cache, np.ones((2, 3)))
    with pytest.raises(ContractError):
        composite_backward(None, np.ones((1, 3)))


def test_halving_a_sample_leaves_the_ray_unchanged():
    rng = np.random.default_rng(3)
    ray_id = np.repeat([0, 1, 2], 6)
    sigma = rng.uniform(0, 5, size=18)
    color = rng.uniform(size=(18, 3))
    dt = rng.uniform(0.02, 0.08, size=18)
    whole = composite(sigma, color, dt, ray_id, 3, background=0.3)
    # every sample becomes two back-to-back halves with the same sigma and color
    halves = composite(np.repeat(sigma, 2), np.repeat(color, 2, axis=0), np.repeat(dt / 2, 2),
                       np.repeat(ray_id, 2), 3, background=0.3)
    assert np.allclose(halves.color, whole.color, atol=1e-12)
    assert np.allclose(halves.opacity, whole.opacity, atol=1e-12)


def test_opacity_never_drops_as_samples_are_added():
    rng = np.random.default_rng(4)
    sigma = rng.uniform(0, 40, size=25)
    color = rng.uniform(size=(25, 3))
    opacity = [composite(sigma[:n], color[:n], 0.03, np.zeros(n, dtype=int), 1).opacity[0] for n in range(26)]
    assert opacity[0] == 0.0
    assert all(b >= a for a, b in zip(opacity, opacity[1:]))
    assert opacity[-1] <= 1.0
