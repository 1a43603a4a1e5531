# coding=utf-8

__all__ = ["scene", "partition", "sampler"]
