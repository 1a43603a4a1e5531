# coding=utf-8
from pytdnerf import (pybudget, pycheck, pycomputer, pydata, pyencode, pyfed, pyfield, pyplot, pyproduct,
                      pyrender, pytrain)
from pytdnerf.pycheck.rcheck import RCheck

__version__ = "0.1.0"

__all__ = ["pybudget", "pycheck", "pycomputer", "pydata", "pyencode", "pyfed", "pyfield", "pyplot",
           "pyproduct", "pyrender", "pytrain", "RCheck", "__version__"]
