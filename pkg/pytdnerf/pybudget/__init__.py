# coding=utf-8

__all__ = ["footprint", "sweep"]
