# coding=utf-8
import numpy as np
import pytest

from pytdnerf.errors import ContractError
from pytdnerf.pyfield.mlp import MlpParams, mlp_backward, mlp_forward

EPS = 1e-6


def loss_of(params, x, upstream):
    out, _ = mlp_forward(params, x)
    return float((out * upstream).sum())


@pytest.fixture
def setup():
    rng = np.random.default_rng(0)
    params = MlpParams.init([5, 7, 6, 3], rng, dtype=np.float64)
    for b in params.biases:
        b[:] = rng.normal(scale=0.1, size=b.shape)
    x = rng.normal(size=(11, 5))
    upstream = rng.normal(size=(11, 3))
    return params, x, upstream


def test_shapes_and_counts(setup):
    params, x, _ = setup
    out, cache = mlp_forward(params, x)
    assert out.shape == (11, 3)
    assert params.dims == [5, 7, 6, 3]
    assert params.parameter_count() == 5 * 7 + 7 + 7 * 6 + 6 + 6 * 3 + 3
    assert params.macs_per_sample() == 5 * 7 + 7 * 6 + 6 * 3
    assert len(cache.inputs) == 3


def test_init_limits():
    params = MlpParams.init([32, 64, 16], np.random.default_rng(1))
    assert params.weights[0].dtype == np.float32
    assert np.abs(params.weights[0]).max() <= np.sqrt(6.0 / 32)
    assert not params.biases[0].any()


def test_weight_gradients_match_finite_differences(setup):
    params, x, upstream = setup
    _, cache = mlp_forward(params, x)
    _, grads = mlp_backward(params, cache, upstream)
    for layer in range(params.n_layers):
        for arrays, analytic in ((params.weights, grads.weights), (params.biases, grads.biases)):
            flat = arrays[layer].reshape(-1)
            for k in range(0, flat.size, max(1, flat.size // 6)):
                keep = flat[k]
                flat[k] = keep + EPS
                plus = loss_of(params, x, upstream)
                flat[k] = keep - EPS
                minus = loss_of(params, x, upstream)
                flat[k] = keep
                numeric = (plus - minus) / (2 * EPS)
                assert analytic[layer].reshape(-1)[k] == pytest.approx(numeric, rel=1e-4, abs=1e-7)


def test_input_gradient_matches_finite_differences(setup):
    params, x, upstream = setup
    _, cache = mlp_forward(params, x)
    d_x, _ = mlp_backward(params, cache, upstream)
    for i, j in ((0, 0), (3, 2), (10, 4)):
        bumped = x.copy()
        bumped[i, j] += EPS
        low = x.copy()
        low[i, j] -= EPS
        numeric = (loss_of(params, bumped, upstream) - loss_of(params, low, upstream)) / (2 * EPS)
        assert d_x[i, j] == pytest.approx(numeric, rel=1e-4, abs=1e-7)


def test_half_weights_compute_in_float32():
    params = MlpParams.init([4, 8, 2], np.random.default_rng(2), dtype=np.float16)
    out, _ = mlp_forward(params, np.ones((3, 4)))
    assert out.dtype == np.float32


def test_contract_errors(setup):
    params, x, upstream = setup
    with pytest.raises(ContractError):
        mlp_forward(params, np.ones((2, 4)))
    _, cache = mlp_forward(params, x)
    with pytest.raises(ContractError):
        mlp_backward(params, cache, upstream[:3])
    with pytest.raises(ContractError):
        mlp_backward(params, None, upstream)
    with pytest.raises(ContractError):
        MlpParams(weights=[np.ones((3, 2))], biases=[np.ones(2)])
