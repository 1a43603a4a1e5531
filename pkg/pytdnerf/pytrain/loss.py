# coding=utf-8
"""
Purpose:   [1] Huber loss on ray colors with its gradient

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

"""

import numpy as np

from pytdnerf.errors import ContractError

HUBER_DELTA = 0.1


def huber_loss(pred, target, delta=HUBER_DELTA, normalizer=None):
    """
    0.5 e^2 for |e| <= delta, delta (|e| - 0.5 delta) beyond, averaged
    :param pred: (n, c)
    :param target: (n, c)
    :param delta: transition point
    :param normalizer: element count to divide by; defaults to pred.size. Tiles of one step pass the
                       step's total so their losses and gradients add up to the step mean
    :return: loss (float), d_pred (n, c)
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ContractError("pred {} and target {} differ in shape".format(pred.shape, target.shape))
    count = pred.size if normalizer is None else normalizer
    if count == 0:
        return 0.0, np.zeros_like(pred)
    e = pred - target
    small = np.abs(e) <= delta
    per = np.where(small, 0.5 * e * e, delta * (np.abs(e) - 0.5 * delta))
    grad = np.where(small, e, delta * np.sign(e))
    return float(per.sum() / count), grad / count
