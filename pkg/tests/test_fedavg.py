# coding=utf-8
from collections import OrderedDict

import numpy as np
import pytest

from pytdnerf.errors import AggregationError
from pytdnerf.pyfed.fedavg import fedavg, normalize_weights


def params(value, shape=(2, 3)):
    return OrderedDict([("a", np.full(shape, value, dtype=np.float32)), ("b", np.full(4, 2 * value))])


def test_identical_sets_come_back_unchanged():
    rng = np.random.default_rng(0)
    x = OrderedDict([("a", rng.normal(size=(3, 3)).astype(np.float32))])
    out = fedavg([x, x, x], [1, 5, 2])
    assert np.array_equal(out["a"], x["a"].astype(np.float64))
    assert out["a"].dtype == np.float64


def test_weighted_mean():
    out = fedavg([params(0.0), params(1.0)], [0.25, 0.75])
    assert np.allclose(out["a"], 0.75)
    assert np.allclose(out["b"], 1.5)


def test_equal_weights_by_default():
    out = fedavg([params(1.0), params(2.0), params(6.0)])
    assert np.allclose(out["a"], 3.0)


def test_linearity():
    rng = np.random.default_rng(1)
    sets = [OrderedDict([("w", rng.normal(size=5))]) for _ in range(3)]
    weights = [1.0, 2.0, 3.0]
    shifted = [OrderedDict([("w", s["w"] + 10.0)]) for s in sets]
    assert np.allclose(fedavg(shifted, weights)["w"], fedavg(sets, weights)["w"] + 10.0)


def test_name_order_follows_the_first_set():
    first = OrderedDict([("z", np.zeros(1)), ("a", np.zeros(1))])
    second = OrderedDict([("a", np.ones(1)), ("z", np.ones(1))])
    assert list(fedavg([first, second])) == ["z", "a"]


def test_mismatches_are_rejected():
    with pytest.raises(AggregationError):
        fedavg([])
    with pytest.raises(AggregationError):
        fedavg([params(0.0), OrderedDict([("a", np.zeros((2, 3)))])])
    with pytest.raises(AggregationError):
        fedavg([params(0.0), params(1.0, shape=(3, 2))])


@pytest.mark.parametrize("weights", [[1.0], [-1.0, 2.0], [0.0, 0.0], [np.nan, 1.0]])
def test_bad_weights(weights):
    with pytest.raises(AggregationError):
        normalize_weights(weights, 2)
