# coding=utf-8
"""
Purpose:   [1] csv products of a run (train log, eval table, federation curves, sweep table)

Usage:     This code depends on the pandas
           pandas can be installed from conda or pip
           This code is compatible with python 3.8.x.

Examples:  write_csv(rows, "runs/lego/eval.csv", columns=["frame", "psnr", "ssim"])

"""

import logging
import os

import pandas as pd

logger = logging.getLogger(__name__)


def to_frame(rows, columns=None):
    """
    :param rows: list of dicts (or a DataFrame)
    :param columns: column order; missing values stay blank
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    if columns is not None:
        frame = frame.reindex(columns=list(columns))
    return frame


def write_csv(rows, path, columns=None, float_format="%.6g"):
    """
    :return: path written
    """
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    to_frame(rows, columns).to_csv(path, index=False, float_format=float_format, na_rep="")
    logger.debug("wrote %s", path)
    return path


def read_csv(path):
    return pd.read_csv(path, keep_default_na=True)
