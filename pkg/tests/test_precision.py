# coding=utf-8
import numpy as np
import pytest

from pytdnerf.errors import ConfigError
from pytdnerf.pyfield import precision


@pytest.mark.parametrize("mode,store,compute", [(precision.FULL64, np.float64, np.float64),
                                                (precision.FULL32, np.float32, np.float32),
                                                (precision.MIXED16, np.float16, np.float32)])
def test_dtype_policy(mode, store, compute):
    assert precision.storage_dtype(mode) == store
    assert precision.compute_dtype(mode) == compute
    assert precision.master_dtype(mode) == compute
    assert precision.mode_from_code(precision.mode_code(mode)) == mode


def test_quantize_rounds_to_half():
    out = precision.quantize(np.array([1.0 + 1e-4]), precision.MIXED16)
    assert out.dtype == np.float16
    assert out[0] == np.float16(1.0)


def test_unknown_mode():
    with pytest.raises(ConfigError):
        precision.check_mode("bf16")
    with pytest.raises(ConfigError):
        precision.mode_from_code(7)


def test_quantize_saturates_instead_of_overflowing():
    out = precision.quantize(np.array([1e6, -1e6, 3.0]), precision.MIXED16)
    assert np.isfinite(out).all()
    assert out.tolist() == [65504.0, -65504.0, 3.0]
    wide = precision.quantize(np.array([1e6]), precision.FULL32)
    assert wide[0] == np.float32(1e6)
