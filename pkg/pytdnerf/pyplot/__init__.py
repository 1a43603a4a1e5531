# coding=utf-8

__all__ = ["plot_curves"]
