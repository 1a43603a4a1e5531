# coding=utf-8
"""
Purpose:   [1] real spherical harmonics of a view direction, degrees 0..3 (16 coefficients)

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  coeffs = sh_encode(directions)   # (n, 3) unit vectors -> (n, 16)

"""

import numpy as np

SH_DEGREE = 3
SH_WIDTH = (SH_DEGREE + 1) ** 2

C0 = 0.28209479177387814
C1 = 0.4886025119029199
C2 = (1.0925484305920792, 1.0925484305920792, 0.31539156525252005, 1.0925484305920792, 0.5462742152960396)
C3 = (0.5900435899266435, 2.890611442640554, 0.4570457994644658, 0.3731763325901154,
      0.4570457994644658, 1.445305721320277, 0.5900435899266435)


def sh_encode(d):
    """
    Y_l^m for l = 0..3, m = -l..l, without the Condon-Shortley phase
    :param d: (..., 3) unit directions
    :return: (..., 16), same float precision as d (at least float32)
    """
    d = np.asarray(d)
    if d.dtype != np.float64:
        d = d.astype(np.float32)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    xx, yy, zz = x * x, y * y, z * z
    out = np.empty(d.shape[:-1] + (SH_WIDTH,), dtype=d.dtype)
    out[..., 0] = C0
    out[..., 1] = C1 * y
    out[..., 2] = C1 * z
    out[..., 3] = C1 * x
    out[..., 4] = C2[0] * x * y
    out[..., 5] = C2[1] * y * z
    out[..., 6] = C2[2] * (3.0 * zz - 1.0)
    out[..., 7] = C2[3] * x * z
    out[..., 8] = C2[4] * (xx - yy)
    out[..., 9] = C3[0] * y * (3.0 * xx - yy)
    out[..., 10] = C3[1] * x * y * z
    out[..., 11] = C3[2] * y * (5.0 * zz - 1.0)
    out[..., 12] = C3[3] * z * (5.0 * zz - 3.0)
    out[..., 13] = C3[4] * x * (5.0 * zz - 1.0)
    out[..., 14] = C3[5] * z * (xx - yy)
    out[..., 15] = C3[6] * x * (xx - 3.0 * yy)
    return out
