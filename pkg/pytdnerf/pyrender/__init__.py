# coding=utf-8

__all__ = ["occupancy", "march", "composite", "render"]
