# coding=utf-8

__all__ = ["loss", "adam", "trainer", "evaluate"]
