# coding=utf-8

__all__ = ["pool"]
