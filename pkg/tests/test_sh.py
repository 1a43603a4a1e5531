# coding=utf-8
import numpy as np

from pytdnerf.pyencode.sh import C0, SH_WIDTH, sh_encode


def fibonacci_sphere(n):
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = np.pi * (1.0 + 5 ** 0.5) * k
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def test_shape_and_constant_term():
    out = sh_encode(fibonacci_sphere(7))
    assert out.shape == (7, SH_WIDTH)
    assert np.allclose(out[:, 0], C0)


def test_basis_is_orthonormal_over_the_sphere():
    y = sh_encode(fibonacci_sphere(20000))
    gram = 4 * np.pi * (y.T @ y) / len(y)
    assert np.allclose(gram, np.eye(SH_WIDTH), atol=1e-2)


def test_keeps_float64_and_promotes_half():
    d = np.array([[0.0, 0.0, 1.0]])
    assert sh_encode(d).dtype == np.float64
    assert sh_encode(d.astype(np.float16)).dtype == np.float32
