# coding=utf-8

__all__ = ["file", "quality", "report", "image"]
